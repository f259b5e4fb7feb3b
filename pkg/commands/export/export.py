# Export d'un champ en image PGM 16 bits

import argparse
import logging

from common import cli as base
from common import dataio, grid
from common.errors import EXIT_OK

logger = logging.getLogger(f'GPSPR.{__name__.split(".")[-1]}')

class Export(base.Command):
    """Rend |champ| (ou |ℱ champ| avec --fourier) en niveaux de gris 16 bits."""
    name = 'export'
    description = "Exporte un fichier brut en image PGM 16 bits"

    def configure(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument('input', help="Champ à exporter (format brut)")
        parser.add_argument('--output', '-o', required=True, help="Image PGM de destination")
        parser.add_argument('--scale', choices=['linear', 'log'], default='linear', help="Échelle des niveaux (défaut linear)")
        parser.add_argument('--shift', action='store_true', help="Recentre la composante continue (diagrammes de diffraction)")
        parser.add_argument('--fourier', action='store_true', help="Exporte le module de la TFD du champ")

    def run(self, args: argparse.Namespace) -> int:
        field = dataio.read_raw(args.input)
        if args.fourier:
            field = grid.dft2(field)
        path = dataio.export_image(field, args.output, args.scale, shift=args.shift)
        print(f"Image écrite : {path}")
        return EXIT_OK

def setup(cli):
    cli.add_command(Export(cli))
