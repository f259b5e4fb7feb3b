# Import de tableaux CSV vers le format brut

import argparse
import logging

from common import cli as base
from common import dataio
from common.errors import EXIT_OK
from common.utils.pretty import bytes_to_human_readable

logger = logging.getLogger(f'GPSPR.{__name__.split(".")[-1]}')

class Convert(base.Command):
    """Convertit un CSV (une ligne de fichier par ligne de tableau) en fichier brut f64 ou u8."""
    name = 'convert'
    description = "Convertit un tableau CSV au format brut"

    def configure(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument('input', help="Fichier CSV")
        parser.add_argument('--output', '-o', required=True, help="Fichier brut de destination")
        parser.add_argument('--centered', action='store_true', help="La composante continue est au centre du tableau (données de détecteur)")
        parser.add_argument('--mask', action='store_true', help="Écrit un masque u8 (valeurs non nulles → 1)")

    def run(self, args: argparse.Namespace) -> int:
        values = dataio.read_csv_array(args.input, centered=args.centered)
        if args.mask:
            values = values != 0
        path = dataio.write_raw(args.output, values)
        print(f"{path} · {values.shape[0]}x{values.shape[1]} · {bytes_to_human_readable(path.stat().st_size)}")
        return EXIT_OK

def setup(cli):
    cli.add_command(Convert(cli))
