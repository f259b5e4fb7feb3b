"""
### SIM : Données simulées
Fantômes de vérité terrain, suréchantillonnage par ajout de zéros et modèle de bruit
(Poisson + lecture gaussienne) produisant des amplitudes de Fourier réalistes.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import cv2
import numpy as np
import numpy.typing as npt

from common import dataio, grid
from common.errors import CalibrationError, DataError, LatticeMismatchError
from common.grid import Field, Lattice, SupportMask
from common.prox import MagnitudeData

logger = logging.getLogger(f'GPSPR.{__name__.split(".")[-1]}')

PhantomKind = Literal['vesicle', 'disks', 'custom-file']
PHANTOM_KINDS = ('vesicle', 'disks', 'custom-file')
SupportShape = Literal['block', 'footprint']
SUPPORT_SHAPES = ('block', 'footprint')
MIN_OBJECT_SIZE = 16

# FANTOMES ==================================================

@dataclass(frozen=True)
class Phantom:
    """Densité de vérité terrain u° (réelle, positive) et son nom."""
    density: npt.NDArray[np.float64]
    name: str = 'phantom'

    def __post_init__(self):
        density = np.asarray(self.density, dtype=np.float64)
        Lattice.of(density)
        if not np.all(np.isfinite(density)):
            raise DataError("Le fantôme contient des valeurs non finies")
        if np.any(density < 0):
            raise DataError("La densité d'un fantôme doit être ≥ 0")
        if not np.any(density > 0):
            raise DataError("La densité d'un fantôme est nulle partout")
        object.__setattr__(self, 'density', density)

    @property
    def lattice(self) -> Lattice:
        return Lattice.of(self.density)


def _soft_disk(distance: np.ndarray, radius: float) -> np.ndarray:
    return np.clip(1.0 - (distance / radius) ** 2, 0.0, None)

def _vesicle(lattice: Lattice, rng: np.random.Generator) -> np.ndarray:
    m = min(lattice.shape)
    d = grid.radial_map(lattice)
    rows, cols = np.indices(lattice.shape)
    c1, c2 = lattice.center
    theta = np.arctan2(rows - c1, cols - c2)

    # Contour déformé (harmoniques 2 et 3) : la coquille n'est pas centrosymétrique
    e2, e3 = rng.uniform(0.03, 0.08), rng.uniform(0.06, 0.1)
    p2, p3 = rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi / 3)
    base, width = 0.32 * m, 0.06 * m
    radius = base * (1 + e2 * np.cos(2 * (theta - p2)) + e3 * np.cos(3 * (theta - p3)))
    density = np.clip(1.0 - ((d - radius) / width) ** 2, 0.0, None)
    density += 0.15 * (d < radius - width)

    inner = base * (1 - e2 - e3) - width
    for _ in range(int(rng.integers(4, 9))):
        gr = rng.uniform(0.04, 0.08) * m
        reach = max(inner - gr - 1, 0.0)
        angle, dist = rng.uniform(0, 2 * np.pi), reach * math.sqrt(rng.uniform())
        g1, g2 = c1 + dist * math.cos(angle), c2 + dist * math.sin(angle)
        density += rng.uniform(0.5, 1.0) * _soft_disk(np.hypot(rows - g1, cols - g2), gr)

    density = cv2.GaussianBlur(density, (0, 0), sigmaX=0.8, borderType=cv2.BORDER_CONSTANT)
    density = np.clip(density, 0.0, None)
    return density / density.max()

def _disks(lattice: Lattice, rng: np.random.Generator, attempts: int = 100) -> np.ndarray:
    m = min(lattice.shape)
    rows, cols = np.indices(lattice.shape)
    for _ in range(attempts):
        density = np.zeros(lattice.shape)
        for _ in range(int(rng.integers(2, 6))):
            r = rng.uniform(0.1, 0.18) * m
            c1 = rng.uniform(r + 1, lattice.n1 - r - 1)
            c2 = rng.uniform(r + 1, lattice.n2 - r - 1)
            density += rng.uniform(0.5, 1.0) * _soft_disk(np.hypot(rows - c1, cols - c2), r)
        coverage = float(np.mean(density > 0))
        if 0.05 <= coverage <= 0.6:
            return density / density.max()
    raise DataError(f"Impossible de générer un fantôme 'disks' sur {lattice} en {attempts} essais")

def make_phantom(kind: PhantomKind,
                 object_size: Lattice | None = None,
                 seed: int = 0,
                 *,
                 path: str | Path | None = None) -> Phantom:
    """Génère un fantôme de vérité terrain.

    - 'vesicle' : coquille annulaire lisse avec granules intérieurs.
    - 'disks' : 2 à 5 disques doux aléatoires (5 % à 60 % des pixels non nuls).
    - 'custom-file' : tableau lu depuis `path` (.raw ou .csv), valeurs négatives ramenées à 0.

    :param kind: Type de fantôme
    :param object_size: Taille de la région objet (≥ 16×16)
    :param seed: Graine du générateur
    :param path: Fichier source pour 'custom-file'
    :return: Phantom
    """
    if kind == 'custom-file':
        if path is None:
            raise DataError("Un fantôme 'custom-file' nécessite un fichier")
        values = np.asarray(dataio.load_array(path))
        if np.iscomplexobj(values):
            values = values.real
        density = np.clip(values.astype(np.float64), 0.0, None)
        if object_size is not None and density.shape != object_size.shape:
            raise LatticeMismatchError(object_size.shape, density.shape, what='fantôme')
        return Phantom(density, Path(path).stem)

    if kind not in PHANTOM_KINDS:
        raise DataError(f"Type de fantôme inconnu : {kind!r}")
    if object_size is None:
        raise DataError("La taille de l'objet est requise")
    if min(object_size.shape) < MIN_OBJECT_SIZE:
        raise DataError(f"Objet trop petit : {object_size} (minimum {MIN_OBJECT_SIZE}x{MIN_OBJECT_SIZE})")
    rng = np.random.default_rng(seed)
    density = _vesicle(object_size, rng) if kind == 'vesicle' else _disks(object_size, rng)
    return Phantom(density, kind)


# SURECHANTILLONNAGE ========================================

def _ratios(ratio: float | tuple[float, float]) -> tuple[float, float]:
    r1, r2 = (ratio, ratio) if np.isscalar(ratio) else ratio # type: ignore
    return float(r1), float(r2)

def embedding_offset(inner: tuple[int, int], outer: Lattice) -> tuple[int, int]:
    """Décalage plaçant un bloc `inner` au centre du réseau `outer` (centres ⌊n/2⌋ alignés)."""
    return (outer.n1 // 2 - inner[0] // 2, outer.n2 // 2 - inner[1] // 2)

def embed(density: npt.ArrayLike, lattice: Lattice) -> npt.NDArray[np.float64]:
    """Place une densité au centre d'un réseau plus grand, complétée par des zéros."""
    density = np.asarray(density, dtype=np.float64)
    n1, n2 = density.shape
    if n1 > lattice.n1 or n2 > lattice.n2:
        raise LatticeMismatchError(lattice.shape, density.shape, what='objet à centrer')
    o1, o2 = embedding_offset((n1, n2), lattice)
    out = np.zeros(lattice.shape)
    out[o1:o1 + n1, o2:o2 + n2] = density
    return out

def footprint_support(density: npt.ArrayLike, margin: int = 0) -> SupportMask:
    """Support ajusté : pixels de densité non nulle, dilatés de `margin` pixels (disque).

    :param density: Densité réelle positive
    :param margin: Dilatation en pixels
    :return: Masque du support
    """
    if margin < 0:
        raise DataError(f"Marge de support négative : {margin}")
    mask = (np.asarray(density, dtype=np.float64) > 0).astype(np.uint8)
    if margin:
        kernel = cv2.getStructuringElement(cv2.MORPH_ELLIPSE, (2 * margin + 1, 2 * margin + 1))
        mask = cv2.dilate(mask, kernel)
    return mask.astype(bool)

def oversample(p: Phantom,
               ratio: float | tuple[float, float] = 2.0,
               margin: int = 0,
               shape: SupportShape = 'block') -> tuple[Field, SupportMask]:
    """Suréchantillonne un fantôme en le plaçant au centre d'un réseau ⌈ratio·n⌉ rempli de zéros.

    :param p: Fantôme
    :param ratio: Rapport de suréchantillonnage (global ou par axe)
    :param margin: Dilatation du support en pixels
    :param shape: 'block' (rectangle de l'objet) ou 'footprint' (pixels non nuls du fantôme)
    :return: Champ suréchantillonné et masque du support
    """
    r1, r2 = _ratios(ratio)
    if r1 < 1 or r2 < 1:
        raise DataError(f"Rapport de suréchantillonnage < 1 : {ratio}")
    if r1 < 2 or r2 < 2:
        logger.warning(f"Rapport de suréchantillonnage {ratio} < 2 : la phase n'est plus déterminée de façon unique")
    if margin < 0:
        raise DataError(f"Marge de support négative : {margin}")
    if shape not in SUPPORT_SHAPES:
        raise DataError(f"Forme de support inconnue : {shape!r}")

    n1, n2 = p.lattice.shape
    lattice = Lattice(math.ceil(r1 * n1), math.ceil(r2 * n2))
    field = embed(p.density, lattice).astype(np.complex128)
    if shape == 'footprint':
        return field, footprint_support(field.real, margin)
    o1, o2 = embedding_offset((n1, n2), lattice)
    support = np.zeros(lattice.shape, dtype=bool)
    support[max(o1 - margin, 0):o1 + n1 + margin, max(o2 - margin, 0):o2 + n2 + margin] = True
    return field, support


# BRUIT =====================================================

@dataclass(frozen=True)
class NoiseSpec:
    """Modèle de bruit : flux total de photons, écart-type de lecture (en coups) et graine."""
    flux: float = 1e9
    readout_sigma: float = 0.0
    poisson_enabled: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.poisson_enabled and not self.flux > 0:
            raise ValueError(f"Le flux doit être > 0 (reçu {self.flux})")
        if self.readout_sigma < 0:
            raise ValueError(f"L'écart-type de lecture doit être ≥ 0 (reçu {self.readout_sigma})")

    @property
    def enabled(self) -> bool:
        return self.poisson_enabled or self.readout_sigma > 0

    def with_seed(self, seed: int) -> 'NoiseSpec':
        return NoiseSpec(self.flux, self.readout_sigma, self.poisson_enabled, seed)


def beamstop_mask(lattice: Lattice, radius: float) -> SupportMask:
    """Pixels mesurés : rayon fréquentiel centré k ≥ `radius` (disque central masqué)."""
    if radius < 0:
        raise ValueError(f"Rayon du beamstop négatif : {radius}")
    return grid.frequency_radius(lattice) >= radius

def _real_density(u0: npt.ArrayLike) -> npt.NDArray[np.float64]:
    u0 = np.asarray(u0)
    if np.iscomplexobj(u0):
        if np.any(u0.imag != 0):
            raise DataError("La densité de vérité terrain doit être réelle")
        u0 = u0.real
    u0 = u0.astype(np.float64)
    Lattice.of(u0)
    if np.any(u0 < 0):
        raise DataError("La densité de vérité terrain doit être ≥ 0")
    return u0

def simulate_magnitudes(u0: npt.ArrayLike, noise: NoiseSpec | None = None, beamstop_radius: float = 0.0) -> MagnitudeData:
    """Simule les amplitudes mesurées b d'une densité suréchantillonnée.

    Les intensités |ℱu°|² sont ramenées au flux total, tirées selon Poisson, bruitées par une lecture
    gaussienne puis tronquées à 0 ; la racine est remise à l'échelle de |ℱu°|. Sans bruit, b = |ℱu°|.

    :param u0: Densité réelle positive sur le réseau suréchantillonné
    :param noise: Modèle de bruit (None = sans bruit)
    :param beamstop_radius: Rayon du disque central non mesuré
    :return: MagnitudeData
    """
    u0 = _real_density(u0)
    lattice = Lattice.of(u0)
    magnitude = np.abs(grid.dft2(u0))
    measured = beamstop_mask(lattice, beamstop_radius)

    if noise is None or not noise.enabled:
        b = magnitude
    else:
        intensity = magnitude ** 2
        total = float(intensity.sum())
        if total <= 0:
            raise DataError("Densité nulle : intensités de diffraction nulles")
        if not noise.flux > 0:
            raise DataError(f"Le flux doit être > 0 (reçu {noise.flux})")
        rng = np.random.default_rng(noise.seed)
        expected = intensity * (noise.flux / total)
        counts = rng.poisson(expected).astype(np.float64) if noise.poisson_enabled else expected.copy()
        if noise.readout_sigma > 0:
            counts += rng.normal(0.0, noise.readout_sigma, size=counts.shape)
        counts = np.clip(counts, 0.0, None)
        b = np.sqrt(counts * (total / noise.flux))

    return MagnitudeData(np.where(measured, b, 0.0), measured)

def r_noise(data: MagnitudeData, u0: npt.ArrayLike) -> float:
    """Erreur relative Σ|b − |ℱu°|| / Σ|ℱu°| sur les pixels mesurés."""
    reference = np.abs(grid.dft2(u0))
    grid.check_same_lattice(data.b, reference, what='vérité terrain')
    denominator = float(np.sum(reference[data.measured]))
    if denominator <= 0:
        raise DataError("Amplitudes de référence nulles : R_noise indéfini")
    return float(np.sum(np.abs(data.b - reference)[data.measured]) / denominator)


# Calibration ------------------------------------------------

def calibrate_flux(u0: npt.ArrayLike,
                   target: float = 0.05,
                   *,
                   readout_sigma: float = 0.0,
                   seed: int = 0,
                   beamstop_radius: float = 0.0,
                   iterations: int = 12,
                   seeds: int = 5,
                   tolerance: float = 0.1,
                   log_range: tuple[float, float] = (1.0, 15.0)) -> tuple[float, float]:
    """Cherche le flux donnant un R_noise proche de `target` par dichotomie sur log10(flux).

    Chaque évaluation prend la médiane de R_noise sur `seeds` graines consécutives à partir de `seed`.

    :param u0: Densité de vérité terrain suréchantillonnée
    :param target: R_noise visé (0.05 = 5 %)
    :param tolerance: Écart relatif toléré sur R_noise (0.1 = ±10 % de la cible)
    :return: (flux, R_noise obtenu)
    """
    if not target > 0:
        raise ValueError(f"Le R_noise visé doit être > 0 (reçu {target})")
    u0 = _real_density(u0)

    def achieved(log_flux: float) -> float:
        values = [r_noise(simulate_magnitudes(u0, NoiseSpec(10 ** log_flux, readout_sigma, True, seed + i), beamstop_radius), u0)
                  for i in range(seeds)]
        return float(np.median(values))

    lo, hi = log_range
    best_log, best_r = lo, math.inf
    for _ in range(iterations):
        mid = (lo + hi) / 2
        r = achieved(mid)
        logger.debug(f"Calibration : flux 1e{mid:.3f} → R_noise {r:.4%}")
        if abs(r - target) < abs(best_r - target):
            best_log, best_r = mid, r
        if r > target:
            lo = mid
        else:
            hi = mid

    if abs(best_r - target) > tolerance * target:
        raise CalibrationError(target, best_r)
    return 10 ** best_log, best_r
