"""
### CONFIG : Configuration d'une expérience
Fusion des sources par priorité croissante : valeurs par défaut < `.env` < fichier `--config` < options explicites.
"""

import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Optional, get_args

from common.errors import UsageError
from common.grid import Lattice
from common.sim import PHANTOM_KINDS, SUPPORT_SHAPES, NoiseSpec
from common.solvers import Algorithm, Schedule, SolverConfig, default_schedule
from common.utils import fuzzy

logger = logging.getLogger(f'GPSPR.{__name__.split(".")[-1]}')

ENV_KEYS = {
    'GPSPR_WORKERS': 'workers',
    'GPSPR_OUTPUT': 'output'
}

# CONFIGURATION =============================================

@dataclass
class ExperimentConfig:
    """Paramètres complets d'une expérience (solveur, jeu de données, bruit, lot et sortie)."""
    # Solveur
    algorithm: str = 'gps-f'
    iterations: int = 1000
    stages: int = 10
    s: float = 0.9
    t: float = 1.0
    beta: float = 0.9
    sigma_schedule: Optional[str] = None
    gamma_schedule: Optional[str] = None
    cutoff_schedule: Optional[str] = None
    exact_smoothing: bool = False
    seed: int = 0
    init: Optional[str] = None
    # Jeu de données
    phantom: Optional[str] = None
    phantom_file: Optional[str] = None
    phantom_seed: int = 0
    object_size: str = '64'
    oversample: float = 2.0
    support_margin: int = 0
    support_shape: str = 'block'
    support_file: Optional[str] = None
    magnitudes: Optional[str] = None
    datamask: Optional[str] = None
    truth: Optional[str] = None
    beamstop: float = 0.0
    # Bruit
    flux: Optional[float] = None
    readout: float = 0.0
    target_rnoise: float = 0.05
    noise_seed: int = 0
    no_noise: bool = False
    # Lot et sortie
    runs: int = 1
    topk: int = 5
    workers: int = 1
    output: str = 'output'

    def __post_init__(self):
        self.validate()

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    # --- Fusion ---

    @classmethod
    def resolve(cls,
                flags: Mapping[str, Any] | None = None,
                *,
                env: Mapping[str, Optional[str]] | None = None,
                file: Mapping[str, Any] | None = None) -> 'ExperimentConfig':
        """Fusionne les sources de configuration.

        :param flags: Options explicites de la ligne de commande (les valeurs None sont ignorées)
        :param env: Valeurs lues dans `.env`
        :param file: Contenu du fichier `--config` (objet plat ou manifeste avec une clé `config`)
        :return: ExperimentConfig
        """
        values: dict[str, Any] = {}
        for key, name in ENV_KEYS.items():
            if env and env.get(key):
                values[name] = env[key]
        if file:
            content = file.get('config', file) if isinstance(file.get('config'), dict) else file
            values.update(cls._checked(content, source='fichier de configuration'))
        if flags:
            values.update({k: v for k, v in cls._checked(flags, source='options').items() if v is not None})
        return cls(**cls._coerced(values))

    @classmethod
    def _checked(cls, values: Mapping[str, Any], *, source: str) -> dict[str, Any]:
        known = cls.keys()
        checked = {}
        for key, value in values.items():
            name = key.replace('-', '_')
            if name not in known:
                hint = fuzzy.suggest(name, known)
                raise UsageError(f"Clé inconnue dans {source} : {key!r}" + (f" (vouliez-vous dire {hint!r} ?)" if hint else ''))
            checked[name] = value
        return checked

    @classmethod
    def _coerced(cls, values: dict[str, Any]) -> dict[str, Any]:
        out = {}
        types = {f.name: f.type for f in fields(cls)}
        for name, value in values.items():
            kind = next((a for a in get_args(types[name]) if a is not type(None)), types[name])
            try:
                if value is None:
                    out[name] = None
                elif kind is bool:
                    out[name] = value if isinstance(value, bool) else str(value).lower() in ('1', 'true', 'yes', 'oui')
                elif kind is int:
                    out[name] = int(value)
                elif kind is float:
                    out[name] = float(value)
                else:
                    out[name] = str(value)
            except (TypeError, ValueError):
                raise UsageError(f"Valeur invalide pour {name} : {value!r}")
        return out

    # --- Vérifications ---

    def validate(self) -> None:
        if self.algorithm not in Algorithm.names():
            hint = fuzzy.suggest(self.algorithm, Algorithm.names())
            raise UsageError(f"Algorithme inconnu : {self.algorithm!r}" + (f" (vouliez-vous dire {hint!r} ?)" if hint else '')
                             + f". Choix : {', '.join(Algorithm.names())}")
        if self.magnitudes is None and self.phantom is None:
            self.phantom = 'custom-file' if self.phantom_file else 'vesicle'
        if (self.magnitudes is None) == (self.phantom is None):
            raise UsageError("Indiquez soit un fantôme (--phantom), soit un fichier d'amplitudes (--magnitudes), pas les deux")
        if self.phantom is not None and self.phantom not in PHANTOM_KINDS:
            hint = fuzzy.suggest(self.phantom, PHANTOM_KINDS)
            raise UsageError(f"Fantôme inconnu : {self.phantom!r}" + (f" (vouliez-vous dire {hint!r} ?)" if hint else ''))
        if self.phantom == 'custom-file' and not self.phantom_file:
            raise UsageError("Le fantôme 'custom-file' nécessite --phantom-file")
        if self.magnitudes is not None and not self.support_file:
            raise UsageError("Un fichier d'amplitudes nécessite un fichier de support (--support-file)")
        if self.stages < 1:
            raise UsageError(f"Il faut au moins un étage (reçu {self.stages})")
        if self.iterations < 0 or self.iterations % self.stages:
            raise UsageError(f"--iterations ({self.iterations}) doit être un multiple positif de --stages ({self.stages})")
        if self.runs < 1:
            raise UsageError(f"--runs doit être ≥ 1 (reçu {self.runs})")
        if self.topk < 1:
            raise UsageError(f"--topk doit être ≥ 1 (reçu {self.topk})")
        if self.workers < 1:
            raise UsageError(f"--workers doit être ≥ 1 (reçu {self.workers})")
        if self.oversample < 1:
            raise UsageError(f"--oversample doit être ≥ 1 (reçu {self.oversample})")
        if self.support_margin < 0 or self.beamstop < 0 or self.readout < 0:
            raise UsageError("--support-margin, --beamstop et --readout doivent être ≥ 0")
        if self.support_shape not in SUPPORT_SHAPES:
            hint = fuzzy.suggest(self.support_shape, SUPPORT_SHAPES)
            raise UsageError(f"Forme de support inconnue : {self.support_shape!r}" + (f" (vouliez-vous dire {hint!r} ?)" if hint else ''))
        if self.flux is not None and not self.flux > 0:
            raise UsageError(f"--flux doit être > 0 (reçu {self.flux})")
        if not self.target_rnoise > 0:
            raise UsageError(f"--target-rnoise doit être > 0 (reçu {self.target_rnoise})")

    # --- Conversions ---

    @property
    def object_lattice(self) -> Lattice:
        return Lattice.parse(self.object_size)

    @property
    def output_path(self) -> Path:
        return Path(self.output)

    def solver_config(self, lattice: Lattice, seed: int | None = None) -> SolverConfig:
        """Construit la configuration du solveur pour un réseau donné.

        :param lattice: Réseau des données
        :param seed: Graine de la reconstruction (par défaut `self.seed`)
        :return: SolverConfig
        """
        algorithm = Algorithm(self.algorithm)
        schedule = default_schedule(algorithm, lattice,
                                    s=self.s,
                                    stages=self.stages,
                                    iters_per_stage=self.iterations // self.stages,
                                    sigma_breakpoints=Schedule.parse_sigma(self.sigma_schedule) if self.sigma_schedule else None,
                                    gamma_per_stage=Schedule.parse_values(self.gamma_schedule) if self.gamma_schedule else None,
                                    cutoff_per_stage=Schedule.parse_values(self.cutoff_schedule) if self.cutoff_schedule else None)
        return SolverConfig(algorithm=algorithm,
                            schedule=schedule,
                            s=self.s,
                            t=self.t,
                            beta=self.beta,
                            seed=self.seed if seed is None else seed,
                            exact_smoothing=self.exact_smoothing)

    def noise_spec(self, flux: float | None = None) -> NoiseSpec | None:
        """Modèle de bruit (None si --no-noise) ; `flux` remplace le flux configuré (calibration)."""
        if self.no_noise:
            return None
        flux = flux if flux is not None else self.flux
        if flux is None:
            raise UsageError("Aucun flux : indiquez --flux ou laissez la calibration sur --target-rnoise")
        return NoiseSpec(flux=flux, readout_sigma=self.readout, poisson_enabled=True, seed=self.noise_seed)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)
