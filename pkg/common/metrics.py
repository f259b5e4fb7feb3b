"""
### METRICS : Qualité des reconstructions
R_real avec recalage (translations et image jumelle), résidu de Fourier et agrégation de lots.
"""

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Literal, Optional, Sequence

import numpy as np
import numpy.typing as npt

from common import grid
from common.errors import DataError
from common.grid import Lattice, SupportMask
from common.prox import MagnitudeData
from common.sim import Phantom, embed

if TYPE_CHECKING:
    from common.solvers import RunRecord

logger = logging.getLogger(f'GPSPR.{__name__.split(".")[-1]}')

REGISTRATION_WINDOW = 2

# MESURES ===================================================

def residual(field: npt.ArrayLike, data: MagnitudeData, domain: Literal['fourier', 'real'] = 'fourier') -> float:
    """Résidu ‖|ℱu| − b‖₂ sur les pixels mesurés.

    :param field: Champ de Fourier z, ou image u si `domain` vaut 'real'
    :param data: Amplitudes mesurées
    :param domain: Domaine du champ fourni
    :return: Résidu
    """
    if domain == 'real':
        z = grid.dft2(field)
    elif domain == 'fourier':
        z = np.asarray(field)
    else:
        raise ValueError(f"Domaine inconnu : {domain!r}")
    grid.check_same_lattice(data.b, z, what='champ')
    misfit = (np.abs(z) - data.b)[data.measured]
    return float(np.sqrt(np.sum(misfit ** 2)))

def twin(u: npt.ArrayLike) -> np.ndarray:
    """Image jumelle : rotation de 180° autour du pixel central (⌊n1/2⌋, ⌊n2/2⌋), conjuguée."""
    u = np.asarray(u)
    lattice = Lattice.of(u)
    c1, c2 = lattice.center
    i1 = (2 * c1 - np.arange(lattice.n1)) % lattice.n1
    i2 = (2 * c2 - np.arange(lattice.n2)) % lattice.n2
    return np.conj(u[np.ix_(i1, i2)])

def r_real(recon: npt.ArrayLike, truth: Phantom, support: SupportMask | None = None, *, window: int = REGISTRATION_WINDOW) -> float:
    """Erreur relative Σ|u − u°| / Σu° après recalage.

    Le minimum est pris sur les translations entières de ±`window` pixels de la reconstruction
    et de son image jumelle, en comparant les parties réelles sur tout le réseau. La vérité est
    centrée sur le réseau de la reconstruction comme lors du suréchantillonnage.

    :param recon: Image reconstruite (espace réel)
    :param truth: Fantôme de vérité terrain (région objet ou réseau complet)
    :param support: Masque du support, vérifié contre le réseau de la reconstruction
    :return: R_real
    """
    recon = np.asarray(recon)
    lattice = Lattice.of(recon)
    if support is not None:
        grid.check_same_lattice(recon, support, what='support')
    reference = embed(truth.density, lattice)
    denominator = float(reference.sum())

    best = np.inf
    for candidate in (np.real(recon), np.real(twin(recon))):
        for d1 in range(-window, window + 1):
            for d2 in range(-window, window + 1):
                shifted = np.roll(candidate, (d1, d2), axis=(0, 1))
                best = min(best, float(np.abs(shifted - reference).sum()) / denominator)
    return best


# AGREGATION ================================================

@dataclass(frozen=True)
class RunSummary:
    seed: int
    best_rf: float
    r_real: Optional[float]
    residual: float
    iterations: int


@dataclass
class BatchSummary:
    """Bilan d'un lot de reconstructions.

    Moyenne et écart-type (population) de R_F sur les k meilleures reconstructions, histogramme
    des R_F et traces de convergence de la meilleure.
    """
    per_run: list[RunSummary]
    rf_histogram: npt.NDArray[np.int64]
    bin_edges: npt.NDArray[np.float64]
    rf_mean_topk: float
    rf_std_topk: float
    k: int
    best_seed: int
    best_trace: list[tuple[int, float, float, float, int]] = field(default_factory=list)
    r_real_mean_topk: Optional[float] = None
    r_real_std_topk: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            'runs': len(self.per_run),
            'k': self.k,
            'rf_mean_topk': self.rf_mean_topk,
            'rf_std_topk': self.rf_std_topk,
            'r_real_mean_topk': self.r_real_mean_topk,
            'r_real_std_topk': self.r_real_std_topk,
            'best_seed': self.best_seed,
            'topk_seeds': [r.seed for r in self.topk()]
        }

    def topk(self) -> list[RunSummary]:
        return sorted(self.per_run, key=lambda r: (r.best_rf, r.seed))[:self.k]


def rf_histogram(values: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Histogramme à largeur de classe fixe (Freedman-Diaconis) ; une seule classe si toutes les valeurs sont égales."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise DataError("Aucune valeur à répartir")
    bins = 1 if np.ptp(values) == 0 else 'fd'
    return np.histogram(values, bins=bins)

def aggregate(runs: Sequence['RunRecord'], truth: Phantom | None = None, k: int = 5) -> BatchSummary:
    """Agrège un lot de reconstructions indépendantes.

    :param runs: Reconstructions (ordre indifférent)
    :param truth: Vérité terrain optionnelle pour calculer R_real
    :param k: Nombre de meilleures reconstructions retenues pour la moyenne
    :return: BatchSummary
    """
    if not runs:
        raise DataError("Aucune reconstruction à agréger")
    if k < 1:
        raise ValueError(f"k doit être ≥ 1 (reçu {k})")
    if k > len(runs):
        logger.warning(f"k = {k} > {len(runs)} reconstructions : k ramené à {len(runs)}")
        k = len(runs)

    per_run = [RunSummary(seed=r.seed,
                          best_rf=r.best_rf,
                          r_real=r_real(r.density, truth) if truth is not None else None,
                          residual=r.residual,
                          iterations=r.iterations_run) for r in runs]
    per_run.sort(key=lambda r: r.seed)
    counts, edges = rf_histogram([r.best_rf for r in per_run])

    top = sorted(per_run, key=lambda r: (r.best_rf, r.seed))[:k]
    rfs = np.array([r.best_rf for r in top])
    best = min(runs, key=lambda r: (r.best_rf, r.seed))
    summary = BatchSummary(per_run=per_run,
                           rf_histogram=counts,
                           bin_edges=edges,
                           rf_mean_topk=float(rfs.mean()),
                           rf_std_topk=float(rfs.std()),
                           k=k,
                           best_seed=best.seed,
                           best_trace=list(best.trace_rows()))
    if truth is not None:
        reals = np.array([r.r_real for r in top])
        summary.r_real_mean_topk = float(reals.mean())
        summary.r_real_std_topk = float(reals.std())
    return summary
