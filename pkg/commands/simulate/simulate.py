# Simulation d'un jeu de données : fantôme, suréchantillonnage et amplitudes bruitées

import argparse
import logging

from tabulate import tabulate

from common import cli as base
from common import dataio
from common.errors import EXIT_OK, UsageError
from common.experiment import prepare_dataset
from common.utils.pretty import format_percent

logger = logging.getLogger(f'GPSPR.{__name__.split(".")[-1]}')

class Simulate(base.Command):
    """Écrit truth.raw, magnitudes.raw, datamask.raw, support.raw et manifest.json."""
    name = 'simulate'
    description = "Simule des amplitudes de diffraction à partir d'un fantôme"

    def configure(self, parser: argparse.ArgumentParser) -> None:
        base.add_config_argument(parser)
        base.add_dataset_arguments(parser, files=False)
        base.add_noise_arguments(parser)
        base.add_output_argument(parser)

    def run(self, args: argparse.Namespace) -> int:
        cfg = self.experiment_config(args)
        if cfg.magnitudes:
            raise UsageError("simulate génère les amplitudes : --magnitudes n'a pas de sens ici")
        dataset = prepare_dataset(cfg)
        if dataset.flux is not None:
            cfg.flux = dataset.flux

        folder = dataio.ensure_folder(cfg.output_path)
        files = {
            'truth': dataio.write_raw(folder / 'truth.raw', dataset.truth.density), # type: ignore
            'magnitudes': dataio.write_raw(folder / 'magnitudes.raw', dataset.data.b),
            'datamask': dataio.write_raw(folder / 'datamask.raw', dataset.data.measured),
            'support': dataio.write_raw(folder / 'support.raw', dataset.support)
        }
        dataio.write_json(folder / 'manifest.json', base.manifest(self.name, cfg,
                                                                  lattice=list(dataset.lattice.shape),
                                                                  noise=dataset.noise_report(),
                                                                  files={k: p.name for k, p in files.items()}))

        rows = [
            ('Fantôme', f"{cfg.phantom} ({cfg.object_size}, graine {cfg.phantom_seed})"),
            ('Réseau', str(dataset.lattice)),
            ('Flux', f"{dataset.flux:.4g}" if dataset.flux is not None else 'sans bruit'),
            ('R_noise', format_percent(dataset.achieved_rnoise)),
            ('Pixels mesurés', f"{int(dataset.data.measured.sum())}/{dataset.lattice.size}"),
            ('Support', f"{cfg.support_shape} ({int(dataset.support.sum())} pixels)"),
            ('Sortie', str(folder))
        ]
        print(tabulate(rows, tablefmt='simple'))
        return EXIT_OK

def setup(cli):
    cli.add_command(Simulate(cli))
