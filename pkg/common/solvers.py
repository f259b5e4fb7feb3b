"""
### SOLVERS : Moteurs d'itération
GPS-R, GPS-F et GPS-RF (primal-dual avec lissage du dual), ER, HIO et OSS en référence.
Tous partagent le même calendrier d'étapes, le suivi du meilleur itéré et le contrat `RunRecord`.
"""

import bisect
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Optional, Sequence

import numpy as np

from common import grid, prox
from common.errors import DataError, DivergenceError, ScheduleError
from common.grid import Field, Lattice, SupportMask
from common.metrics import residual
from common.prox import FidelityWeight, MagnitudeData, SmoothingParam

logger = logging.getLogger(f'GPSPR.{__name__.split(".")[-1]}')

IterationCallback = Callable[[int, int, np.ndarray, Optional[np.ndarray]], None]

DEFAULT_SIGMA_BREAKPOINTS = ((0, 0.01), (400, 0.1))
FOURIER_FLOOR = 0.01 # Atténuation exp(−s·γ₁·r_max²) visée au premier étage de GPS-F

# CONFIGURATION =============================================

class Algorithm(str, Enum):
    ER = 'er'
    HIO = 'hio'
    OSS = 'oss'
    GPS_R = 'gps-r'
    GPS_F = 'gps-f'
    GPS_RF = 'gps-rf'

    @property
    def is_gps(self) -> bool:
        return self in (Algorithm.GPS_R, Algorithm.GPS_F, Algorithm.GPS_RF)

    @property
    def variant(self) -> str:
        """Variante GPS ('R', 'F' ou 'RF')"""
        if not self.is_gps:
            raise ValueError(f"{self.value} n'est pas un algorithme GPS")
        return self.value.split('-')[1].upper()

    @classmethod
    def names(cls) -> list[str]:
        return [a.value for a in cls]


@dataclass(frozen=True)
class Schedule:
    """Calendrier d'étapes : nombre d'étages, itérations par étage, filtres et paliers de σ.

    - `gamma_per_stage` : γ_l du lissage principal (fourier pour GPS-F/GPS-RF, réel pour GPS-R),
      non croissant (filtres de plus en plus fins).
    - `cutoff_per_stage` : coupures α_l des passe-bas (GPS-RF, OSS), non décroissantes.
    - `sigma_breakpoints` : paliers (itération de départ, σ), triés, le premier à l'itération 0.
    """
    stages: int = 10
    iters_per_stage: int = 100
    gamma_per_stage: tuple[float, ...] = ()
    sigma_breakpoints: tuple[tuple[int, float], ...] = DEFAULT_SIGMA_BREAKPOINTS
    cutoff_per_stage: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, 'gamma_per_stage', tuple(float(g) for g in self.gamma_per_stage) or (0.0,) * self.stages)
        object.__setattr__(self, 'sigma_breakpoints', tuple((int(i), float(s)) for i, s in self.sigma_breakpoints))
        if self.cutoff_per_stage is not None:
            object.__setattr__(self, 'cutoff_per_stage', tuple(float(a) for a in self.cutoff_per_stage))
        self.validate()

    def validate(self) -> None:
        if self.stages < 1:
            raise ScheduleError(f"Il faut au moins un étage (reçu {self.stages})")
        if self.iters_per_stage < 0:
            raise ScheduleError(f"Nombre d'itérations par étage négatif ({self.iters_per_stage})")
        if len(self.gamma_per_stage) != self.stages:
            raise ScheduleError(f"{len(self.gamma_per_stage)} valeurs de γ pour {self.stages} étages")
        if any(g < 0 for g in self.gamma_per_stage):
            raise ScheduleError("Les γ doivent être ≥ 0")
        if any(b > a for a, b in zip(self.gamma_per_stage, self.gamma_per_stage[1:])):
            raise ScheduleError("Les γ doivent être non croissants (filtres de plus en plus fins)")
        if self.cutoff_per_stage is not None:
            if len(self.cutoff_per_stage) != self.stages:
                raise ScheduleError(f"{len(self.cutoff_per_stage)} coupures pour {self.stages} étages")
            if any(a <= 0 for a in self.cutoff_per_stage):
                raise ScheduleError("Les coupures doivent être > 0")
            if any(b < a for a, b in zip(self.cutoff_per_stage, self.cutoff_per_stage[1:])):
                raise ScheduleError("Les coupures doivent être non décroissantes (filtres de plus en plus fins)")
        if not self.sigma_breakpoints:
            raise ScheduleError("Le calendrier de σ est vide")
        starts = [i for i, _ in self.sigma_breakpoints]
        if starts[0] != 0:
            raise ScheduleError("Le premier palier de σ doit commencer à l'itération 0")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ScheduleError("Les paliers de σ doivent être strictement croissants")
        if any(s < 0 for _, s in self.sigma_breakpoints):
            raise ScheduleError("Les σ doivent être ≥ 0")

    @property
    def total_iterations(self) -> int:
        return self.stages * self.iters_per_stage

    # --- Lecture ---

    @staticmethod
    def parse_sigma(text: str) -> tuple[tuple[int, float], ...]:
        """Lit un calendrier de σ de la forme `0:0.01,400:0.1`."""
        try:
            pairs = [p.split(':') for p in text.replace(' ', '').split(',') if p]
            return tuple((int(i), float(s)) for i, s in pairs)
        except ValueError:
            raise ScheduleError(f"Calendrier de σ invalide : {text!r} (attendu `iter:sigma,...`)")

    @staticmethod
    def parse_values(text: str) -> tuple[float, ...]:
        """Lit une liste de valeurs de la forme `a,b,c`."""
        try:
            return tuple(float(v) for v in text.replace(' ', '').split(',') if v)
        except ValueError:
            raise ScheduleError(f"Liste de valeurs invalide : {text!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            'stages': self.stages,
            'iters_per_stage': self.iters_per_stage,
            'gamma_per_stage': list(self.gamma_per_stage),
            'sigma_breakpoints': [list(p) for p in self.sigma_breakpoints],
            'cutoff_per_stage': list(self.cutoff_per_stage) if self.cutoff_per_stage is not None else None
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> 'Schedule':
        return cls(
            stages=int(data['stages']),
            iters_per_stage=int(data['iters_per_stage']),
            gamma_per_stage=tuple(data.get('gamma_per_stage') or ()),
            sigma_breakpoints=tuple(tuple(p) for p in data.get('sigma_breakpoints') or DEFAULT_SIGMA_BREAKPOINTS),
            cutoff_per_stage=tuple(data['cutoff_per_stage']) if data.get('cutoff_per_stage') is not None else None
        )


def sigma_at(schedule: Schedule, iteration: int) -> float:
    """σ du dernier palier commencé à l'itération donnée.

    :param schedule: Calendrier
    :param iteration: Itération globale (≥ 0)
    :return: σ
    """
    if iteration < 0:
        raise ValueError(f"Itération négative ({iteration})")
    starts = [i for i, _ in schedule.sigma_breakpoints]
    return schedule.sigma_breakpoints[bisect.bisect_right(starts, iteration) - 1][1]


def default_schedule(algorithm: Algorithm | str,
                     lattice: Lattice,
                     *,
                     s: float = 0.9,
                     stages: int = 10,
                     iters_per_stage: int = 100,
                     sigma_breakpoints: Sequence[tuple[int, float]] | None = None,
                     gamma_per_stage: Sequence[float] | None = None,
                     cutoff_per_stage: Sequence[float] | None = None) -> Schedule:
    """Construit le calendrier par défaut d'un algorithme, les valeurs fournies étant prioritaires.

    - Coupures α_l linéairement espacées de max(n1,n2)/10 à max(n1,n2).
    - GPS-F : γ_l = γ₁·2^−(l−1) avec exp(−s·γ₁·r_max²) = 0.01.
    - GPS-R : γ_l déduits des coupures α_l.
    - σ : 0.01 puis 0.1 à partir de l'itération 400 pour GPS, 0 pour ER/HIO/OSS.
    """
    algorithm = Algorithm(algorithm)
    n = max(lattice.n1, lattice.n2)
    cutoffs = tuple(cutoff_per_stage) if cutoff_per_stage is not None else tuple(np.linspace(n / 10, n, stages))
    if gamma_per_stage is not None:
        gammas = tuple(gamma_per_stage)
    elif algorithm in (Algorithm.GPS_F, Algorithm.GPS_RF):
        r_max = float(grid.radial_map(lattice).max())
        g1 = math.log(1 / FOURIER_FLOOR) / (s * r_max ** 2)
        gammas = tuple(g1 * 2.0 ** -l for l in range(stages))
    elif algorithm == Algorithm.GPS_R:
        gammas = tuple(grid.gamma_from_cutoff(a, lattice, s) for a in cutoffs)
    else:
        gammas = (0.0,) * stages
    if sigma_breakpoints is None:
        sigma_breakpoints = DEFAULT_SIGMA_BREAKPOINTS if algorithm.is_gps else ((0, 0.0),)
    uses_cutoffs = algorithm in (Algorithm.GPS_R, Algorithm.GPS_RF, Algorithm.OSS)
    return Schedule(stages=stages,
                    iters_per_stage=iters_per_stage,
                    gamma_per_stage=gammas,
                    sigma_breakpoints=tuple(sigma_breakpoints),
                    cutoff_per_stage=cutoffs if uses_cutoffs else None)


@dataclass(frozen=True)
class SolverConfig:
    """Paramètres d'une reconstruction : algorithme, pas s/t, rétroaction β, calendrier et graine."""
    algorithm: Algorithm
    schedule: Schedule
    s: float = 0.9
    t: float = 1.0
    beta: float = 0.9
    seed: int = 0
    exact_smoothing: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'algorithm', Algorithm(self.algorithm))
        if not self.s > 0 or not self.t > 0:
            raise ValueError(f"Les pas doivent être > 0 (reçu s={self.s}, t={self.t})")
        if not 0 < self.beta <= 1:
            raise ValueError(f"β doit être dans ]0, 1] (reçu {self.beta})")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"La graine doit être un entier 64 bits non signé (reçu {self.seed})")
        if self.algorithm.is_gps and self.s * self.t > 1:
            logger.warning(f"s·t = {self.s * self.t:.3g} > 1 : la stabilité de l'itération primal-dual n'est pas garantie")

    def with_seed(self, seed: int) -> 'SolverConfig':
        return SolverConfig(self.algorithm, self.schedule, self.s, self.t, self.beta, seed, self.exact_smoothing)

    def to_dict(self) -> dict[str, Any]:
        return {
            'algorithm': self.algorithm.value,
            'schedule': self.schedule.to_dict(),
            's': self.s,
            't': self.t,
            'beta': self.beta,
            'seed': self.seed,
            'exact_smoothing': self.exact_smoothing
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> 'SolverConfig':
        return cls(algorithm=Algorithm(data['algorithm']),
                   schedule=Schedule.from_dict(data['schedule']),
                   s=float(data.get('s', 0.9)),
                   t=float(data.get('t', 1.0)),
                   beta=float(data.get('beta', 0.9)),
                   seed=int(data.get('seed', 0)),
                   exact_smoothing=bool(data.get('exact_smoothing', False)))


@dataclass
class RunRecord:
    """Résultat d'une reconstruction.

    `final_image` est ℱ⁻¹z_best ; `density` est sa projection sur la contrainte objet,
    c'est-à-dire la densité réelle positive rapportée par les commandes.
    """
    rf_trace: list[float]
    best_rf: float
    best_iterate: Field
    final_image: Field
    density: Field
    residual: float
    iterations_run: int
    config_echo: SolverConfig
    sigma_trace: list[float] = field(default_factory=list)
    gamma_trace: list[float] = field(default_factory=list)
    stage_trace: list[int] = field(default_factory=list)

    @property
    def seed(self) -> int:
        return self.config_echo.seed

    def trace_rows(self) -> Iterable[tuple[int, float, float, float, int]]:
        """Lignes (itération, R_F, σ, γ, étage) de la trace."""
        for i, rf in enumerate(self.rf_trace):
            yield (i, rf, self.sigma_trace[i], self.gamma_trace[i], self.stage_trace[i])


# R-FACTOR ==================================================

def rf_factor(z: np.ndarray, data: MagnitudeData) -> float:
    """R_F = Σ_mesurés ||z| − b| / Σ_mesurés b.

    :param z: Champ de Fourier
    :param data: Amplitudes mesurées
    :return: R_F
    """
    grid.check_same_lattice(np.asarray(z), data.b, what='amplitudes')
    denominator = float(np.sum(data.b[data.measured]))
    if denominator <= 0:
        raise DataError("Amplitudes mesurées toutes nulles : R_F indéfini")
    misfit = np.abs(np.abs(z) - data.b)[data.measured]
    return float(np.sum(misfit) / denominator)

def _projected_rf(image: np.ndarray, support: SupportMask, data: MagnitudeData) -> float:
    return rf_factor(grid.dft2(prox.proj_object(image, support)), data)


# INITIALISATION ============================================

def initial_fourier(data: MagnitudeData, seed: int, initial: np.ndarray | None = None) -> Field:
    """Itéré de départ z⁰.

    Sans image initiale : z⁰ = b∘exp(iθ), θ uniforme sur [0, 2π) tiré du générateur `seed`,
    nul sur les pixels non mesurés. Avec une image : amplitudes b et phase de sa TFD sur les pixels
    mesurés, sa TFD telle quelle ailleurs.
    """
    if initial is None:
        rng = np.random.default_rng(seed)
        theta = rng.uniform(0.0, 2 * np.pi, size=data.b.shape)
        return np.where(data.measured, data.b * np.exp(1j * theta), 0.0).astype(np.complex128)
    grid.check_same_lattice(data.b, np.asarray(initial), what='image initiale')
    guess = grid.dft2(initial)
    return np.where(data.measured, data.b * prox.phase(guess), guess)

def _check_inputs(data: MagnitudeData, support: SupportMask) -> SupportMask:
    return grid.check_support(support, data.lattice)

def _check_finite(iteration: int, **arrays: np.ndarray) -> None:
    for name, array in arrays.items():
        if not np.all(np.isfinite(array)):
            raise DivergenceError(iteration, name)


# GPS =======================================================

def run_gps(data: MagnitudeData,
            support: SupportMask,
            config: SolverConfig,
            variant: str | None = None,
            *,
            initial: np.ndarray | None = None,
            callback: IterationCallback | None = None) -> RunRecord:
    """Reconstruction GPS (itération primal-dual avec lissage du dual).

    Pour chaque étage l et itération k :
    z^{k+1} = prox_{tg_σ}(z^k − t·ℱy^k) ;
    y^{k+1/2} = proj_𝒮*(y^k + s·ℱ⁻¹(2z^{k+1} − z^k)) ;
    y^{k+1} = lissage réel (R), fourier (F) ou fourier puis réel (RF) de y^{k+1/2}.
    Chaque étage repart du meilleur couple (z, y) rencontré. R_F est mesuré sur l'itéré produit
    par chaque mise à jour, dernier compris (sur z⁰ seulement si le calendrier est vide).

    :param data: Amplitudes mesurées
    :param support: Masque du support
    :param config: Paramètres du solveur
    :param variant: 'R', 'F' ou 'RF' (par défaut celle de `config.algorithm`)
    :param initial: Image initiale optionnelle (espace réel)
    :param callback: Appelé avant chaque mise à jour avec (itération, étage, z^k, y^k)
    :return: RunRecord
    """
    support = _check_inputs(data, support)
    variant = (variant or config.algorithm.variant).upper()
    if variant not in ('R', 'F', 'RF'):
        raise ValueError(f"Variante GPS inconnue : {variant!r}")
    schedule = config.schedule
    if variant == 'RF' and schedule.cutoff_per_stage is None:
        raise ScheduleError("GPS-RF nécessite un calendrier de coupures")

    lattice = data.lattice
    rmap = grid.radial_map(lattice)
    s, t = config.s, config.t
    exact = config.exact_smoothing

    z = initial_fourier(data, config.seed, initial)
    y = np.zeros_like(z)
    best_rf, z_best, y_best = math.inf, z.copy(), y.copy()
    rf_trace, sigma_trace, gamma_trace, stage_trace = [], [], [], []

    def track(stage: int, sigma: float, gamma: float) -> None:
        nonlocal best_rf, z_best, y_best
        rf = _projected_rf(grid.idft2(z), support, data)
        rf_trace.append(rf)
        sigma_trace.append(sigma)
        gamma_trace.append(gamma)
        stage_trace.append(stage)
        if rf < best_rf:
            best_rf, z_best, y_best = rf, z.copy(), y.copy()

    with np.errstate(over='ignore', invalid='ignore'):
        for stage in range(schedule.stages):
            gamma = schedule.gamma_per_stage[stage]
            if variant == 'R':
                smoothers = [SmoothingParam(gamma, 'real', exact)]
            elif variant == 'F':
                smoothers = [SmoothingParam(gamma, 'fourier', exact)]
            else:
                gamma_real = grid.gamma_from_cutoff(schedule.cutoff_per_stage[stage], lattice, s) # type: ignore
                smoothers = [SmoothingParam(gamma, 'fourier', exact), SmoothingParam(gamma_real, 'real', exact)]
            if stage > 0:
                z, y = z_best.copy(), y_best.copy()
            logger.debug(f"Étage {stage + 1}/{schedule.stages} : γ = {gamma:.4g}, meilleur R_F = {best_rf:.4%}")

            for k in range(schedule.iters_per_stage):
                iteration = stage * schedule.iters_per_stage + k
                sigma = sigma_at(schedule, iteration)
                if callback:
                    callback(iteration, stage, z, y)

                z_next = prox.prox_magnitude(z - t * grid.dft2(y), data, FidelityWeight(sigma, t, s))
                y_half = prox.proj_support_dual(y + s * grid.idft2(2 * z_next - z), support)
                for smoother in smoothers:
                    y_half = prox.smooth_dual(y_half, smoother, s, rmap)
                z, y = z_next, y_half
                _check_finite(iteration, z=z, y=y)
                track(stage, sigma, gamma)

    if not rf_trace:
        track(0, sigma_at(schedule, 0), schedule.gamma_per_stage[0])
    return _build_record(data, support, config, z_best, rf_trace, best_rf, sigma_trace, gamma_trace, stage_trace)


# ALGORITHMES DE REFERENCE ==================================

def run_baseline(data: MagnitudeData,
                 support: SupportMask,
                 config: SolverConfig,
                 *,
                 initial: np.ndarray | None = None,
                 callback: IterationCallback | None = None) -> RunRecord:
    """Reconstruction par projections alternées (ER, HIO, OSS) sur une densité réelle.

    - ER : u ← proj_𝒮(ℱ⁻¹(proj_𝒯(ℱu))).
    - HIO : u' = ℱ⁻¹(proj_𝒯(ℱu)) ; u' là où il respecte la contrainte objet, u − β·u' ailleurs.
    - OSS : HIO puis passe-bas gaussien de coupure α_l appliqué hors du support ; chaque étage
      repart du meilleur itéré.

    R_F est mesuré sur l'itéré produit par chaque mise à jour.

    :param callback: Appelé avant chaque mise à jour avec (itération, étage, u^k, None)
    """
    support = _check_inputs(data, support)
    algorithm = config.algorithm
    if algorithm.is_gps:
        raise ValueError(f"{algorithm.value} n'est pas un algorithme de référence")
    schedule = config.schedule
    if algorithm == Algorithm.OSS and schedule.cutoff_per_stage is None:
        raise ScheduleError("OSS nécessite un calendrier de coupures")

    projection = FidelityWeight(0.0, 1.0, 1.0)
    u = grid.idft2(initial_fourier(data, config.seed, initial)).real
    best_rf, u_best = math.inf, u.copy()
    rf_trace, gamma_trace, stage_trace = [], [], []

    def track(stage: int, alpha: float) -> None:
        nonlocal best_rf, u_best
        rf = _projected_rf(u, support, data)
        rf_trace.append(rf)
        gamma_trace.append(alpha)
        stage_trace.append(stage)
        if rf < best_rf:
            best_rf, u_best = rf, u.copy()

    with np.errstate(over='ignore', invalid='ignore'):
        for stage in range(schedule.stages):
            alpha = schedule.cutoff_per_stage[stage] if algorithm == Algorithm.OSS else 0.0 # type: ignore
            if algorithm == Algorithm.OSS and stage > 0:
                u = u_best.copy()
            logger.debug(f"Étage {stage + 1}/{schedule.stages} ({algorithm.value}) : meilleur R_F = {best_rf:.4%}")

            for k in range(schedule.iters_per_stage):
                iteration = stage * schedule.iters_per_stage + k
                if callback:
                    callback(iteration, stage, u, None)

                projected = grid.idft2(prox.prox_magnitude(grid.dft2(u), data, projection)).real
                if algorithm == Algorithm.ER:
                    u = np.where(support, np.maximum(projected, 0.0), 0.0)
                else:
                    feasible = support & (projected >= 0)
                    u = np.where(feasible, projected, u - config.beta * projected)
                    if algorithm == Algorithm.OSS:
                        smoothed = grid.gaussian_lowpass(u, alpha, domain='real').real
                        u = np.where(support, u, smoothed)
                _check_finite(iteration, u=u)
                track(stage, alpha)

    if not rf_trace:
        track(0, schedule.cutoff_per_stage[0] if algorithm == Algorithm.OSS else 0.0) # type: ignore
    z_best = grid.dft2(prox.proj_object(u_best, support))
    sigma_trace = [0.0] * len(rf_trace)
    return _build_record(data, support, config, z_best, rf_trace, best_rf, sigma_trace, gamma_trace, stage_trace)


# OUTILS ====================================================

def _build_record(data: MagnitudeData, support: SupportMask, config: SolverConfig, z_best: Field,
                  rf_trace: list[float], best_rf: float, sigma_trace: list[float],
                  gamma_trace: list[float], stage_trace: list[int]) -> RunRecord:
    final_image = grid.idft2(z_best)
    density = prox.proj_object(final_image, support)
    return RunRecord(rf_trace=rf_trace,
                     best_rf=best_rf,
                     best_iterate=z_best,
                     final_image=final_image,
                     density=density,
                     residual=residual(density, data, domain='real'),
                     iterations_run=config.schedule.total_iterations,
                     config_echo=config,
                     sigma_trace=sigma_trace,
                     gamma_trace=gamma_trace,
                     stage_trace=stage_trace)

def reconstruct(data: MagnitudeData,
                support: SupportMask,
                config: SolverConfig,
                *,
                initial: np.ndarray | None = None,
                callback: IterationCallback | None = None) -> RunRecord:
    """Lance l'algorithme choisi dans `config`."""
    if config.algorithm.is_gps:
        return run_gps(data, support, config, initial=initial, callback=callback)
    return run_baseline(data, support, config, initial=initial, callback=callback)
