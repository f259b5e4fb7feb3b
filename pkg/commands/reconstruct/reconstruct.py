# Reconstruction unique : une graine, un algorithme

import argparse
import logging
import time

from tabulate import tabulate

from common import cli as base
from common import dataio
from common.errors import EXIT_OK
from common.experiment import prepare_dataset, run_one
from common.metrics import r_real
from common.utils.pretty import format_percent, humanize_duration

logger = logging.getLogger(f'GPSPR.{__name__.split(".")[-1]}')

class Reconstruct(base.Command):
    """Écrit recon.raw (densité reconstruite), rf_trace.csv, metrics.json et manifest.json."""
    name = 'reconstruct'
    description = "Reconstruit une image à partir d'amplitudes de Fourier"

    def configure(self, parser: argparse.ArgumentParser) -> None:
        base.add_config_argument(parser)
        base.add_solver_arguments(parser)
        base.add_dataset_arguments(parser)
        base.add_noise_arguments(parser)
        base.add_output_argument(parser)

    def run(self, args: argparse.Namespace) -> int:
        cfg = self.experiment_config(args)
        dataset = prepare_dataset(cfg)
        if dataset.flux is not None:
            cfg.flux = dataset.flux
        config = cfg.solver_config(dataset.lattice)

        start = time.perf_counter()
        record = run_one(dataset, config)
        elapsed = time.perf_counter() - start
        logger.info(f"{config.algorithm.value} terminé en {humanize_duration(elapsed)} : R_F = {record.best_rf:.4%}")

        metrics = {
            'algorithm': config.algorithm.value,
            'seed': config.seed,
            'best_rf': record.best_rf,
            'r_real': r_real(record.density, dataset.truth) if dataset.truth is not None else None,
            'residual': record.residual,
            'iterations': record.iterations_run
        }
        folder = dataio.ensure_folder(cfg.output_path)
        dataio.write_raw(folder / 'recon.raw', record.density.real)
        dataio.write_trace(folder / 'rf_trace.csv', record.trace_rows())
        dataio.write_json(folder / 'metrics.json', metrics)
        dataio.write_json(folder / 'manifest.json', base.manifest(self.name, cfg,
                                                                  lattice=list(dataset.lattice.shape),
                                                                  noise=dataset.noise_report(),
                                                                  solver=config.to_dict()))

        rows = [
            ('Algorithme', metrics['algorithm']),
            ('Graine', metrics['seed']),
            ('Itérations', metrics['iterations']),
            ('R_F', format_percent(metrics['best_rf'], 4)),
            ('R_real', format_percent(metrics['r_real'], 4)),
            ('Résidu', f"{metrics['residual']:.4g}"),
            ('Sortie', str(folder))
        ]
        print(tabulate(rows, tablefmt='simple'))
        return EXIT_OK

def setup(cli):
    cli.add_command(Reconstruct(cli))
