"""
### EXPERIMENT : Orchestration des expériences
Préparation du jeu de données (simulation ou fichiers), reconstruction unique et lots multi-graines
exécutés en parallèle. Les résultats d'un lot sont triés par graine : ils ne dépendent ni du nombre
de processus ni de l'ordre d'achèvement.
"""

import functools
import logging
from dataclasses import dataclass
from multiprocessing import Pool
from typing import Optional

import numpy as np
from tqdm import tqdm

from common import dataio, grid, sim
from common.config import ExperimentConfig
from common.errors import GPSError
from common.grid import Lattice, SupportMask
from common.prox import MagnitudeData
from common.sim import Phantom
from common.solvers import RunRecord, SolverConfig, reconstruct

logger = logging.getLogger(f'GPSPR.{__name__.split(".")[-1]}')

# JEU DE DONNEES ============================================

@dataclass
class Dataset:
    """Données d'une expérience : amplitudes, support et, pour une simulation, la vérité terrain."""
    data: MagnitudeData
    support: SupportMask
    truth: Optional[Phantom] = None
    flux: Optional[float] = None
    achieved_rnoise: Optional[float] = None
    initial: Optional[np.ndarray] = None

    @property
    def lattice(self) -> Lattice:
        return self.data.lattice

    def noise_report(self) -> dict:
        return {'flux': self.flux, 'r_noise': self.achieved_rnoise}


def _simulated(cfg: ExperimentConfig) -> Dataset:
    kind = cfg.phantom or 'vesicle'
    size = None if kind == 'custom-file' else cfg.object_lattice
    phantom = sim.make_phantom(kind, size, cfg.phantom_seed, path=cfg.phantom_file) # type: ignore
    u0, support = sim.oversample(phantom, cfg.oversample, cfg.support_margin, cfg.support_shape) # type: ignore
    density = u0.real

    flux = cfg.flux
    if not cfg.no_noise and flux is None:
        logger.info(f"Calibration du flux pour R_noise ≈ {cfg.target_rnoise:.2%}")
        flux, _ = sim.calibrate_flux(density, cfg.target_rnoise,
                                     readout_sigma=cfg.readout,
                                     seed=cfg.noise_seed,
                                     beamstop_radius=cfg.beamstop)
    data = sim.simulate_magnitudes(density, cfg.noise_spec(flux), cfg.beamstop)
    achieved = sim.r_noise(data, density)
    logger.info(f"Jeu simulé '{phantom.name}' sur {Lattice.of(density)} : R_noise = {achieved:.3%}")
    return Dataset(data=data,
                   support=support,
                   truth=Phantom(density, phantom.name),
                   flux=None if cfg.no_noise else flux,
                   achieved_rnoise=achieved)

def _loaded(cfg: ExperimentConfig) -> Dataset:
    b = dataio.read_real(cfg.magnitudes) # type: ignore
    measured = dataio.read_mask(cfg.datamask) if cfg.datamask else np.ones(b.shape, dtype=bool)
    grid.check_same_lattice(b, measured, what='masque de données')
    if cfg.beamstop > 0:
        measured &= sim.beamstop_mask(Lattice.of(b), cfg.beamstop)
    data = MagnitudeData(np.where(measured, b, 0.0), measured)
    truth = Phantom(dataio.read_real(cfg.truth), 'truth') if cfg.truth else None
    if truth is not None:
        grid.check_same_lattice(b, truth.density, what='vérité terrain')
    return Dataset(data=data, support=np.zeros(b.shape, dtype=bool), truth=truth)

def prepare_dataset(cfg: ExperimentConfig) -> Dataset:
    """Construit le jeu de données décrit par la configuration.

    :param cfg: Configuration de l'expérience
    :return: Dataset
    """
    dataset = _loaded(cfg) if cfg.magnitudes else _simulated(cfg)
    if cfg.support_file:
        dataset.support = dataio.read_mask(cfg.support_file)
    dataset.support = grid.check_support(dataset.support, dataset.lattice)
    if cfg.init:
        initial = dataio.read_real(cfg.init)
        grid.check_same_lattice(dataset.data.b, initial, what='image initiale')
        dataset.initial = initial
    return dataset


# RECONSTRUCTIONS ===========================================

@dataclass
class RunOutcome:
    """Résultat d'une reconstruction d'un lot : l'enregistrement ou le message d'erreur."""
    seed: int
    record: Optional[RunRecord] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.record is not None


def run_one(dataset: Dataset, config: SolverConfig) -> RunRecord:
    """Lance une reconstruction sur le jeu de données."""
    return reconstruct(dataset.data, dataset.support, config, initial=dataset.initial)

def _run_seed(dataset: Dataset, config: SolverConfig, seed: int) -> RunOutcome:
    try:
        return RunOutcome(seed, record=run_one(dataset, config.with_seed(seed)))
    except GPSError as e:
        return RunOutcome(seed, error=str(e))
    except Exception as e:
        logger.error(f"Erreur inattendue dans la reconstruction {seed} : {type(e).__name__}: {e}")
        logger.debug("Détail de l'erreur", exc_info=True)
        return RunOutcome(seed, error=f"{type(e).__name__}: {e}")

def run_batch(dataset: Dataset,
              config: SolverConfig,
              runs: int,
              *,
              workers: int = 1,
              progress: bool = True) -> list[RunOutcome]:
    """Lance `runs` reconstructions indépendantes de graines config.seed … config.seed + runs − 1.

    Une reconstruction en échec est consignée sans interrompre le lot.

    :param dataset: Jeu de données
    :param config: Configuration du solveur (graine de base)
    :param runs: Nombre de reconstructions
    :param workers: Nombre de processus (1 = exécution dans le processus courant)
    :param progress: Affiche une barre de progression
    :return: Résultats triés par graine
    """
    seeds = range(config.seed, config.seed + runs)
    task = functools.partial(_run_seed, dataset, config)
    bar = dict(total=runs, desc=config.algorithm.value, unit='run', disable=not progress)
    if workers <= 1 or runs == 1:
        outcomes = [task(seed) for seed in tqdm(seeds, **bar)]
    else:
        with Pool(processes=min(workers, runs)) as pool:
            outcomes = list(tqdm(pool.imap_unordered(task, seeds), **bar))

    outcomes.sort(key=lambda o: o.seed)
    for outcome in outcomes:
        if not outcome.ok:
            logger.error(f"Reconstruction {outcome.seed} en échec : {outcome.error}")
    return outcomes
