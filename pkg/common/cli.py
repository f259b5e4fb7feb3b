"""
### CLI : Socle commun des commandes
Analyseur d'options qui remonte les erreurs d'usage en `UsageError`, classe de base des commandes
et groupes d'options partagés entre `simulate`, `reconstruct` et `batch`.
"""

import argparse
import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any, NoReturn

from common import dataio
from common.config import ExperimentConfig
from common.errors import UsageError
from common.sim import PHANTOM_KINDS
from common.solvers import Algorithm

if TYPE_CHECKING:
    from gpspr import CLI

logger = logging.getLogger(f'GPSPR.{__name__.split(".")[-1]}')

GLOBAL_OPTIONS = ('command', 'config', 'verbose', 'quiet')

# ANALYSEUR =================================================

class GPSArgumentParser(argparse.ArgumentParser):
    """ArgumentParser dont les erreurs deviennent des `UsageError` (code de sortie 1)."""
    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog} : {message}")


class Command:
    """Commande chargée par la ligne de commande, à sous-classer."""
    name: str = ''
    description: str = ''

    def __init__(self, cli: 'CLI'):
        self.cli = cli

    def __repr__(self) -> str:
        return f'<Command name={self.name!r}>'

    def configure(self, parser: argparse.ArgumentParser) -> None:
        """Déclare les options de la commande."""

    def run(self, args: argparse.Namespace) -> int:
        """Exécute la commande et renvoie le code de sortie."""
        raise NotImplementedError

    # --- Configuration ---

    def experiment_config(self, args: argparse.Namespace) -> ExperimentConfig:
        """Fusionne `.env`, le fichier `--config` et les options explicites."""
        file = dataio.read_json(args.config) if getattr(args, 'config', None) else None
        flags = {k: v for k, v in vars(args).items() if k not in GLOBAL_OPTIONS}
        return ExperimentConfig.resolve(flags, env=self.cli.config, file=file)


# GROUPES D'OPTIONS =========================================
# Toutes les valeurs par défaut sont None : seules les options explicites écrasent la configuration.

def add_config_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', type=Path, help="Fichier JSON de configuration (ou manifeste d'une expérience précédente)")

def add_solver_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group('solveur')
    group.add_argument('--algorithm', '-a', help=f"Algorithme : {', '.join(Algorithm.names())} (défaut gps-f)")
    group.add_argument('--iterations', type=int, help="Nombre total d'itérations, multiple de --stages (défaut 1000)")
    group.add_argument('--stages', type=int, help="Nombre d'étages du calendrier (défaut 10)")
    group.add_argument('--step-s', dest='s', type=float, help="Pas dual s (défaut 0.9)")
    group.add_argument('--step-t', dest='t', type=float, help="Pas primal t (défaut 1)")
    group.add_argument('--sigma-schedule', help="Paliers de σ `iter:sigma,...` (défaut 0:0.01,400:0.1 pour GPS)")
    group.add_argument('--gamma-schedule', help="γ par étage `g1,g2,...`, non croissants")
    group.add_argument('--cutoff-schedule', help="Coupures de passe-bas par étage `a1,a2,...`, non décroissantes")
    group.add_argument('--exact-smoothing', action='store_true', default=None, help="Lissages exacts 1/(1+sγr²) et Euler implicite")
    group.add_argument('--beta', type=float, help="Rétroaction β de HIO/OSS (défaut 0.9)")
    group.add_argument('--seed', type=int, help="Graine de la reconstruction (graine de base d'un lot)")
    group.add_argument('--init', help="Image initiale (espace réel, format brut)")

def add_dataset_arguments(parser: argparse.ArgumentParser, *, files: bool = True) -> None:
    group = parser.add_argument_group('jeu de données')
    group.add_argument('--phantom', help=f"Fantôme simulé : {', '.join(PHANTOM_KINDS)} (défaut vesicle)")
    group.add_argument('--phantom-file', help="Densité du fantôme 'custom-file' (.raw ou .csv)")
    group.add_argument('--phantom-seed', type=int, help="Graine du fantôme (défaut 0)")
    group.add_argument('--object-size', help="Taille de l'objet `64` ou `64x48` (défaut 64)")
    group.add_argument('--oversample', type=float, help="Rapport de suréchantillonnage (défaut 2)")
    group.add_argument('--support-margin', type=int, help="Dilatation du support en pixels (défaut 0)")
    group.add_argument('--support-shape', help="Forme du support simulé : block (rectangle de l'objet) ou footprint (pixels non nuls du fantôme) (défaut block)")
    group.add_argument('--support-file', help="Masque de support (format brut)")
    group.add_argument('--beamstop', type=float, help="Rayon du disque central non mesuré (défaut 0)")
    if files:
        group.add_argument('--magnitudes', help="Amplitudes mesurées (format brut), à la place d'un fantôme")
        group.add_argument('--datamask', help="Masque des pixels mesurés (format brut)")
        group.add_argument('--truth', help="Vérité terrain pour R_real (format brut)")

def add_noise_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group('bruit')
    group.add_argument('--flux', type=float, help="Flux total de photons (sinon calibré sur --target-rnoise)")
    group.add_argument('--readout', type=float, help="Écart-type du bruit de lecture, en coups (défaut 0)")
    group.add_argument('--target-rnoise', type=float, help="R_noise visé lors de la calibration (défaut 0.05)")
    group.add_argument('--noise-seed', type=int, help="Graine du bruit (défaut 0)")
    group.add_argument('--no-noise', action='store_true', default=None, help="Amplitudes exactes, sans bruit")

def add_batch_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group('lot')
    group.add_argument('--runs', type=int, help="Nombre de reconstructions (défaut 1)")
    group.add_argument('--topk', type=int, help="Nombre de meilleures reconstructions moyennées (défaut 5)")
    group.add_argument('--workers', type=int, help="Nombre de processus (défaut 1 ou GPSPR_WORKERS)")

def add_output_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--output', '-o', help="Dossier de sortie (défaut output ou GPSPR_OUTPUT)")

def manifest(command: str, config: ExperimentConfig, **extra: Any) -> dict[str, Any]:
    """Manifeste d'une expérience : la configuration résolue suffit à la rejouer."""
    return {'command': command, 'config': config.to_dict(), **extra}
