# Mesures sur une reconstruction existante

import argparse
import logging

import numpy as np
from tabulate import tabulate

from common import cli as base
from common import dataio, grid
from common.errors import EXIT_OK
from common.metrics import r_real, residual
from common.prox import MagnitudeData
from common.sim import Phantom
from common.solvers import rf_factor
from common.utils.pretty import format_percent

logger = logging.getLogger(f'GPSPR.{__name__.split(".")[-1]}')

class Metrics(base.Command):
    """Calcule R_F, le résidu et, avec une vérité terrain, R_real d'une image reconstruite."""
    name = 'metrics'
    description = "Évalue une reconstruction (R_F, résidu, R_real)"

    def configure(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument('recon', help="Image reconstruite (format brut, espace réel)")
        parser.add_argument('--magnitudes', required=True, help="Amplitudes mesurées (format brut)")
        parser.add_argument('--datamask', help="Masque des pixels mesurés (format brut)")
        parser.add_argument('--truth', help="Vérité terrain (format brut)")
        parser.add_argument('--support-file', help="Masque de support (format brut)")
        parser.add_argument('--output', '-o', help="Fichier JSON de sortie")

    def run(self, args: argparse.Namespace) -> int:
        recon = dataio.read_raw(args.recon)
        b = dataio.read_real(args.magnitudes)
        measured = dataio.read_mask(args.datamask) if args.datamask else np.ones(b.shape, dtype=bool)
        data = MagnitudeData(np.where(measured, b, 0.0), measured)
        grid.check_same_lattice(b, recon, what='reconstruction')
        support = grid.check_support(dataio.read_mask(args.support_file), data.lattice) if args.support_file else None

        values = {
            'rf': rf_factor(grid.dft2(recon), data),
            'residual': residual(recon, data, domain='real'),
            'r_real': r_real(recon, Phantom(dataio.read_real(args.truth), 'truth'), support) if args.truth else None
        }
        if args.output:
            dataio.write_json(args.output, values)
        rows = [('R_F', format_percent(values['rf'], 4)),
                ('Résidu', f"{values['residual']:.4g}"),
                ('R_real', format_percent(values['r_real'], 4))]
        print(tabulate(rows, tablefmt='simple'))
        return EXIT_OK

def setup(cli):
    cli.add_command(Metrics(cli))
