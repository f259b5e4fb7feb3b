import importlib
import logging
import sys
from pathlib import Path
from typing import Sequence

from dotenv import dotenv_values

from common.cli import Command, GPSArgumentParser
from common.errors import EXIT_OK, GPSError

logging.basicConfig(
    level=logging.INFO,
    format="[%(asctime)s] %(levelname)s (%(name)s %(module)s) %(message)s",
)
logger = logging.getLogger('GPSPR.Main')

COMMANDS_PATH = Path(__file__).parent / 'commands'


class CLI:
    """Ligne de commande : charge les commandes du dossier `commands/` et distribue les appels."""
    def __init__(self, config: dict | None = None):
        self.config = config if config is not None else dotenv_values('.env')
        self.commands: dict[str, Command] = {}

        self.parser = GPSArgumentParser(prog='gpspr', description="Reconstruction de phase par lissage du dual (GPS) et algorithmes de référence")
        self.parser.add_argument('--verbose', '-v', action='store_true', help="Journal détaillé (DEBUG)")
        self.parser.add_argument('--quiet', '-q', action='store_true', help="Journal réduit aux avertissements")
        self.subparsers = self.parser.add_subparsers(dest='command', metavar='COMMANDE')
        self.subparsers.required = True

    def add_command(self, command: Command) -> None:
        """Enregistre une commande et ses options."""
        if command.name in self.commands:
            raise ValueError(f"Commande déjà chargée : {command.name}")
        parser = self.subparsers.add_parser(command.name, help=command.description, description=command.description)
        command.configure(parser)
        self.commands[command.name] = command

    def load_commands(self) -> None:
        """Charge chaque module `commands/<nom>/<nom>.py` via sa fonction `setup(cli)`."""
        for folder in sorted(p.name for p in COMMANDS_PATH.iterdir() if p.is_dir() and not p.name.startswith('_')):
            try:
                module = importlib.import_module(f'commands.{folder}.{folder}')
                module.setup(self)
                logger.debug(f"Commande chargée : '{folder}'")
            except Exception as e:
                logger.error(f"x Erreur {folder} > {type(e).__name__}: {e}")

    def set_log_level(self, verbose: bool = False, quiet: bool = False) -> None:
        level = self.config.get('LOG_LEVEL') or 'INFO'
        if verbose:
            level = 'DEBUG'
        elif quiet:
            level = 'WARNING'
        try:
            logging.getLogger().setLevel(level.upper())
        except ValueError:
            logger.warning(f"LOG_LEVEL inconnu : {level!r}, niveau INFO conservé")

    def run(self, argv: Sequence[str] | None = None) -> int:
        """Analyse les arguments, exécute la commande demandée et renvoie le code de sortie."""
        try:
            args = self.parser.parse_args(argv)
            self.set_log_level(args.verbose, args.quiet)
            return self.commands[args.command].run(args)
        except GPSError as e:
            print(f"**Erreur ·** {e}", file=sys.stderr)
            logger.debug('Détail', exc_info=True)
            return e.exit_code


def main(argv: Sequence[str] | None = None) -> int:
    cli = CLI()
    cli.load_commands()
    return cli.run(argv)

if __name__ == "__main__":
    sys.exit(main() or EXIT_OK)
