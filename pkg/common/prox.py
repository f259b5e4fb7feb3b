"""
### PROX : Opérateurs proximaux et projections
Prox de la fidélité aux amplitudes, projection sur le support dual 𝒮*, lissages réel et fourier
du dual, projection sur la contrainte objet (algorithmes de référence) et variante à données manquantes.
"""

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
import numpy.typing as npt

from common import grid
from common.errors import DataError
from common.grid import Field, Lattice, RadialMap, SupportMask

logger = logging.getLogger(f'GPSPR.{__name__.split(".")[-1]}')

# TYPES =====================================================

@dataclass(frozen=True)
class MagnitudeData:
    """Amplitudes de Fourier mesurées b et masque des pixels mesurés.

    Les pixels non mesurés (beamstop, interstices de détecteur) ont `measured` à False ;
    leur valeur de b est ignorée partout.
    """
    b: npt.NDArray[np.float64]
    measured: npt.NDArray[np.bool_]

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64)
        measured = np.asarray(self.measured, dtype=bool)
        grid.check_same_lattice(b, measured, what='masque de données')
        if not np.all(np.isfinite(b)):
            raise DataError("Les amplitudes contiennent des valeurs non finies")
        if np.any(b[measured] < 0):
            raise DataError("Les amplitudes mesurées doivent être ≥ 0")
        object.__setattr__(self, 'b', b)
        object.__setattr__(self, 'measured', measured)

    @property
    def lattice(self) -> Lattice:
        return Lattice.of(self.b)

    @classmethod
    def complete(cls, b: npt.ArrayLike) -> 'MagnitudeData':
        """Données sans pixel manquant."""
        b = np.asarray(b, dtype=np.float64)
        return cls(b, np.ones(b.shape, dtype=bool))


@dataclass(frozen=True)
class FidelityWeight:
    """Poids de relaxation σ de la fidélité et pas primal t / dual s."""
    sigma: float
    t: float = 1.0
    s: float = 0.9

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"σ doit être ≥ 0 (reçu {self.sigma})")
        if not self.t > 0 or not self.s > 0:
            raise ValueError(f"Les pas doivent être > 0 (reçu t={self.t}, s={self.s})")

    @property
    def ratio(self) -> float:
        """Rapport σ/t"""
        return self.sigma / self.t


@dataclass(frozen=True)
class SmoothingParam:
    """Poids de régularisation γ et espace de lissage du dual."""
    gamma: float
    mode: Literal['real', 'fourier'] = 'fourier'
    exact: bool = False

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"γ doit être ≥ 0 (reçu {self.gamma})")
        if self.mode not in ('real', 'fourier'):
            raise ValueError(f"Mode de lissage inconnu : {self.mode!r}")


# PROJECTIONS ===============================================

def phase(z: npt.ArrayLike) -> Field:
    """Facteur de phase unitaire exp(i·arg(z)), égal à 1 là où z = 0."""
    z = np.asarray(z, dtype=np.complex128)
    out = np.ones_like(z)
    nonzero = z != 0
    out[nonzero] = z[nonzero] / np.abs(z[nonzero])
    return out

def prox_magnitude(z: npt.ArrayLike, data: MagnitudeData, w: FidelityWeight) -> Field:
    """Prox de t·g_σ : interpolation entre z et sa projection sur {|v| = b}.

    Sur les pixels mesurés renvoie (b∘phase(z) + (σ/t)·z) / (1 + σ/t) ; les pixels non
    mesurés sont laissés inchangés. Avec σ = 0 c'est la projection exacte sur les amplitudes.

    :param z: Champ de Fourier
    :param data: Amplitudes mesurées
    :param w: Poids de fidélité et pas
    :return: Champ de Fourier mis à jour
    """
    z = np.asarray(z, dtype=np.complex128)
    grid.check_same_lattice(z, data.b, what='amplitudes')
    ratio = w.ratio
    projected = data.b * phase(z)
    relaxed = (projected + ratio * z) / (1 + ratio) if ratio else projected
    return np.where(data.measured, relaxed, z)

def proj_support_dual(y: npt.ArrayLike, support: SupportMask) -> Field:
    """Projection sur 𝒮* = {Re(y) ≤ 0 sur S} : partie réelle tronquée à min(0, ·) dans le support."""
    y = np.asarray(y, dtype=np.complex128)
    grid.check_same_lattice(y, support, what='support')
    clipped = np.minimum(0.0, y.real) + 1j * y.imag
    return np.where(support, clipped, y)

def proj_object(u: npt.ArrayLike, support: SupportMask) -> Field:
    """Projection sur la contrainte objet 𝒮 : densité réelle ≥ 0 dans le support, nulle ailleurs.

    Le résultat est stocké en complexe avec une partie imaginaire exactement nulle.
    """
    u = np.asarray(u, dtype=np.complex128)
    grid.check_same_lattice(u, support, what='support')
    return np.where(support, np.maximum(0.0, u.real), 0.0).astype(np.complex128)


# LISSAGES DU DUAL ==========================================

def smooth_dual_real(y: npt.ArrayLike, gamma: float, s: float, *, backend: Literal['heat', 'euler'] = 'heat') -> Field:
    """Lissage en espace réel du dual (GPS-R).

    - 'heat' : convolution par le noyau de la chaleur au temps τ = s·γ (gaussienne de
      variance 2sγ par axe), réalisée par multiplication fréquentielle exp(−sγ|ω|²).
    - 'euler' : résolution exacte de (I + sγ·DᵀD)x = y avec le laplacien circulaire à cinq points.

    :param y: Dual en espace réel
    :param gamma: Poids γ ≥ 0 (0 = identité)
    :param s: Pas dual
    :param backend: 'heat' ou 'euler'
    :return: Dual lissé
    """
    if gamma < 0:
        raise ValueError(f"γ doit être ≥ 0 (reçu {gamma})")
    y = np.asarray(y, dtype=np.complex128)
    if gamma == 0:
        return y.copy()
    lattice = Lattice.of(y)
    if backend == 'heat':
        m = grid.heat_multiplier(lattice, s * gamma)
    elif backend == 'euler':
        m = 1.0 / (1.0 + s * gamma * grid.laplacian_eigenvalues(lattice))
    else:
        raise ValueError(f"Méthode de lissage inconnue : {backend!r}")
    return grid.idft2(grid.dft2(y) * m)

def smooth_dual_fourier(y: npt.ArrayLike, rmap: RadialMap, gamma: float, s: float, *, exact: bool = False) -> Field:
    """Lissage fourier du dual (GPS-F) : y ∘ exp(−sγr²), ou y ∘ 1/(1 + sγr²) si `exact`."""
    if gamma < 0:
        raise ValueError(f"γ doit être ≥ 0 (reçu {gamma})")
    y = np.asarray(y, dtype=np.complex128)
    grid.check_same_lattice(y, rmap, what='carte radiale')
    if gamma == 0:
        return y.copy()
    x = s * gamma * rmap ** 2
    m = 1.0 / (1.0 + x) if exact else np.exp(-x)
    return y * m

def smooth_dual(y: npt.ArrayLike, param: SmoothingParam, s: float, rmap: RadialMap | None = None) -> Field:
    """Applique le lissage décrit par `param`."""
    if param.mode == 'real':
        return smooth_dual_real(y, param.gamma, s, backend='euler' if param.exact else 'heat')
    if rmap is None:
        rmap = grid.radial_map(Lattice.of(np.asarray(y)))
    return smooth_dual_fourier(y, rmap, param.gamma, s, exact=param.exact)


# OUTILS ====================================================

def magnitude_fidelity(z: npt.ArrayLike, data: MagnitudeData, sigma: float) -> float:
    """g_σ(z) = Σ_mesurés (|z| − b)² / (2σ)"""
    if not sigma > 0:
        raise ValueError(f"σ doit être > 0 (reçu {sigma})")
    z = np.asarray(z)
    grid.check_same_lattice(z, data.b, what='amplitudes')
    misfit = (np.abs(z) - data.b)[data.measured]
    return float(np.sum(misfit ** 2) / (2 * sigma))

def spectral_gradient(w: npt.ArrayLike) -> tuple[Field, Field]:
    """Dérivée spectrale circulaire d'un champ de Fourier, composante par axe.

    D_j w = ℱ(−i·x_j ∘ ℱ⁻¹w) avec x_j la coordonnée centrée (pixels) ; c'est la dérivée de w
    par rapport à la fréquence angulaire normalisée ω_j·n_j/2π. Par unitarité,
    ‖D ℱu‖² = ‖D_1 ℱu‖² + ‖D_2 ℱu‖² = ‖r∘u‖² exactement.
    """
    w = np.asarray(w, dtype=np.complex128)
    lattice = Lattice.of(w)
    c1, c2 = lattice.center
    x1 = (np.arange(lattice.n1) - c1)[:, None]
    x2 = (np.arange(lattice.n2) - c2)[None, :]
    u = grid.idft2(w)
    return grid.dft2(-1j * x1 * u), grid.dft2(-1j * x2 * u)
