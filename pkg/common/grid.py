"""
### GRID : Substrat numérique commun
Réseau Ω, champs complexes 2D, paire de TFD unitaire, cartes radiales et filtres gaussiens.

Conventions :
- TFD unitaire (1/√n dans les deux sens), donc ℱ* = ℱ⁻¹.
- Les champs de Fourier sont stockés non centrés (composante continue à l'indice (0, 0)).
- Le pixel central est (⌊n1/2⌋, ⌊n2/2⌋), pour la carte radiale comme pour le centrage des fréquences.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
import numpy.typing as npt

from common.errors import DataError, LatticeMismatchError

logger = logging.getLogger(f'GPSPR.{__name__.split(".")[-1]}')

Field = npt.NDArray[np.complex128]
SupportMask = npt.NDArray[np.bool_]
RadialMap = npt.NDArray[np.float64]

_FFT_NORM = 'ortho'

# RESEAU ====================================================

@dataclass(frozen=True)
class Lattice:
    """Réseau discret Ω de n1 lignes et n2 colonnes."""
    n1: int
    n2: int

    def __post_init__(self):
        for name in ('n1', 'n2'):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise DataError(f"Dimension de réseau non entière : {name}={value!r}")
            object.__setattr__(self, name, int(value))
        if self.n1 < 2 or self.n2 < 2:
            raise DataError(f"Réseau trop petit : {self.n1}×{self.n2} (minimum 2×2)")

    def __str__(self) -> str:
        return f'{self.n1}x{self.n2}'

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def size(self) -> int:
        """Nombre total de pixels n = n1·n2"""
        return self.n1 * self.n2

    @property
    def center(self) -> tuple[int, int]:
        """Indice du pixel central (⌊n1/2⌋, ⌊n2/2⌋)"""
        return (self.n1 // 2, self.n2 // 2)

    @classmethod
    def of(cls, array: np.ndarray) -> 'Lattice':
        """Renvoie le réseau sur lequel est défini un tableau 2D.

        :param array: Tableau 2D
        :return: Lattice
        """
        if np.ndim(array) != 2:
            raise DataError(f"Un champ doit être 2D (reçu {np.ndim(array)}D)")
        return cls(*np.shape(array))

    @classmethod
    def parse(cls, text: str) -> 'Lattice':
        """Lit une taille de la forme `64` ou `64x48`."""
        parts = text.lower().replace('×', 'x').split('x')
        try:
            dims = [int(p) for p in parts]
        except ValueError:
            raise DataError(f"Taille de réseau invalide : {text!r}")
        if len(dims) == 1:
            return cls(dims[0], dims[0])
        if len(dims) == 2:
            return cls(dims[0], dims[1])
        raise DataError(f"Taille de réseau invalide : {text!r}")


# Vérifications ----------------------------------------------

def check_same_lattice(reference: np.ndarray, *others: np.ndarray, what: str = 'champ') -> Lattice:
    """Vérifie que tous les tableaux partagent le réseau de `reference`.

    :param reference: Tableau de référence
    :param others: Tableaux à comparer
    :param what: Nom de l'objet comparé (pour le message d'erreur)
    :return: Réseau commun
    """
    lattice = Lattice.of(reference)
    for other in others:
        if np.shape(other) != lattice.shape:
            raise LatticeMismatchError(lattice.shape, tuple(np.shape(other)), what=what)
    return lattice

def check_support(support: SupportMask, lattice: Lattice | None = None) -> SupportMask:
    """Vérifie qu'un masque de support est booléen, non trivial et sur le bon réseau."""
    mask = np.asarray(support)
    if mask.dtype != np.bool_:
        mask = mask.astype(bool)
    if lattice is not None and mask.shape != lattice.shape:
        raise LatticeMismatchError(lattice.shape, mask.shape, what='support')
    Lattice.of(mask)
    if not mask.any():
        raise DataError("Le support est vide")
    if mask.all():
        raise DataError("Le support couvre tout le réseau (aucune région de densité nulle)")
    return mask


# TRANSFORMEES ==============================================

def dft2(u: npt.ArrayLike) -> Field:
    """TFD 2D unitaire d'un champ.

    :param u: Champ en espace réel
    :return: Champ de Fourier (non centré)
    """
    return np.fft.fft2(np.asarray(u, dtype=np.complex128), norm=_FFT_NORM)

def idft2(z: npt.ArrayLike) -> Field:
    """TFD 2D inverse unitaire, adjointe exacte de `dft2`.

    :param z: Champ de Fourier (non centré)
    :return: Champ en espace réel
    """
    return np.fft.ifft2(np.asarray(z, dtype=np.complex128), norm=_FFT_NORM)


# CARTES RADIALES ===========================================

@lru_cache(maxsize=32)
def _radial(n1: int, n2: int) -> RadialMap:
    c1, c2 = n1 // 2, n2 // 2
    rows = np.arange(n1, dtype=np.float64) - c1
    cols = np.arange(n2, dtype=np.float64) - c2
    r = np.hypot(rows[:, None], cols[None, :])
    r.setflags(write=False)
    return r

def radial_map(lattice: Lattice) -> RadialMap:
    """Distance euclidienne (en pixels) de chaque pixel au pixel central.

    :param lattice: Réseau
    :return: Carte radiale (lecture seule)
    """
    return _radial(lattice.n1, lattice.n2)

@lru_cache(maxsize=32)
def _frequency_radius(n1: int, n2: int) -> RadialMap:
    k = np.fft.ifftshift(_radial(n1, n2))
    k.setflags(write=False)
    return k

def frequency_radius(lattice: Lattice) -> RadialMap:
    """Rayon fréquentiel centré k (en pixels) dans la disposition non centrée des champs de Fourier."""
    return _frequency_radius(lattice.n1, lattice.n2)

def angular_frequencies(lattice: Lattice) -> tuple[np.ndarray, np.ndarray]:
    """Fréquences angulaires signées ω_j = 2πk_j/n_j (radians par pixel), disposition non centrée.

    :param lattice: Réseau
    :return: Colonne ω_1 (n1×1) et ligne ω_2 (1×n2), à combiner par diffusion
    """
    w1 = 2 * np.pi * np.fft.fftfreq(lattice.n1)
    w2 = 2 * np.pi * np.fft.fftfreq(lattice.n2)
    return w1[:, None], w2[None, :]


# FILTRES ===================================================

@lru_cache(maxsize=64)
def _lowpass(n1: int, n2: int, alpha: float) -> np.ndarray:
    k = _frequency_radius(n1, n2)
    m = np.exp(-(k ** 2) / (2 * alpha ** 2))
    m.setflags(write=False)
    return m

def lowpass_multiplier(lattice: Lattice, alpha: float) -> np.ndarray:
    """Multiplicateur fréquentiel exp(−k²/(2α²)) d'un passe-bas gaussien de coupure α."""
    if not alpha > 0:
        raise ValueError(f"La coupure du passe-bas doit être > 0 (reçu {alpha})")
    return _lowpass(lattice.n1, lattice.n2, float(alpha))

def gaussian_lowpass(z: npt.ArrayLike, alpha: float, *, domain: Literal['fourier', 'real'] = 'fourier') -> Field:
    """Filtre passe-bas gaussien.

    Sur un champ de Fourier la multiplication est directe ; sur un champ réel on fait
    l'aller-retour TFD → multiplication → TFD inverse.

    :param z: Champ à filtrer
    :param alpha: Coupure en pixels fréquentiels (> 0)
    :param domain: Domaine du champ fourni, 'fourier' ou 'real'
    :return: Champ filtré, dans le même domaine
    """
    field = np.asarray(z, dtype=np.complex128)
    m = lowpass_multiplier(Lattice.of(field), alpha)
    if domain == 'fourier':
        return field * m
    if domain == 'real':
        return idft2(dft2(field) * m)
    raise ValueError(f"Domaine inconnu : {domain!r}")

@lru_cache(maxsize=64)
def _laplacian(n1: int, n2: int) -> np.ndarray:
    lam = (4 * np.sin(np.pi * np.fft.fftfreq(n1)) ** 2)[:, None] + (4 * np.sin(np.pi * np.fft.fftfreq(n2)) ** 2)[None, :]
    lam.setflags(write=False)
    return lam

def laplacian_eigenvalues(lattice: Lattice) -> np.ndarray:
    """Valeurs propres de DᵀD (laplacien circulaire à cinq points, signe positif), disposition non centrée."""
    return _laplacian(lattice.n1, lattice.n2)

def heat_multiplier(lattice: Lattice, tau: float) -> np.ndarray:
    """Multiplicateur exp(−τ·|ω|²) du noyau de la chaleur au temps τ.

    Équivaut à une convolution par une gaussienne de variance 2τ (pixels²) par axe.
    """
    if tau < 0:
        raise ValueError(f"Le temps de diffusion doit être ≥ 0 (reçu {tau})")
    w1, w2 = angular_frequencies(lattice)
    return np.exp(-tau * (w1 ** 2 + w2 ** 2))

def gamma_from_cutoff(alpha: float, lattice: Lattice, s: float = 1.0) -> float:
    """Convertit une coupure de passe-bas α en poids γ du lissage réel.

    exp(−sγ·(2πk/N)²) = exp(−k²/(2α²)) avec N = max(n1, n2).

    :param alpha: Coupure en pixels fréquentiels
    :param lattice: Réseau
    :param s: Pas dual
    :return: γ
    """
    if not alpha > 0:
        raise ValueError(f"La coupure du passe-bas doit être > 0 (reçu {alpha})")
    if not s > 0:
        raise ValueError(f"Le pas dual doit être > 0 (reçu {s})")
    n = max(lattice.n1, lattice.n2)
    return n ** 2 / (8 * np.pi ** 2 * alpha ** 2 * s)
