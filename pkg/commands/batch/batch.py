# Lots de reconstructions indépendantes (histogrammes, moyennes sur les meilleures, convergence)

import argparse
import logging
import time

import pandas as pd
from tabulate import tabulate

from common import cli as base
from common import dataio
from common.errors import EXIT_OK, EXIT_PARTIAL
from common.experiment import RunOutcome, prepare_dataset, run_batch
from common.metrics import BatchSummary, aggregate
from common.utils.pretty import format_percent, humanize_duration, text_histogram

logger = logging.getLogger(f'GPSPR.{__name__.split(".")[-1]}')

BATCH_COLUMNS = ['seed', 'status', 'best_rf', 'r_real', 'residual', 'iterations', 'error']

class Batch(base.Command):
    """Écrit batch.csv, histogram.csv, convergence_best.csv, summary.json et manifest.json."""
    name = 'batch'
    description = "Lance des reconstructions de graines consécutives et agrège leurs résultats"

    def configure(self, parser: argparse.ArgumentParser) -> None:
        base.add_config_argument(parser)
        base.add_solver_arguments(parser)
        base.add_dataset_arguments(parser)
        base.add_noise_arguments(parser)
        base.add_batch_arguments(parser)
        base.add_output_argument(parser)

    def run(self, args: argparse.Namespace) -> int:
        cfg = self.experiment_config(args)
        dataset = prepare_dataset(cfg)
        if dataset.flux is not None:
            cfg.flux = dataset.flux
        config = cfg.solver_config(dataset.lattice)

        start = time.perf_counter()
        outcomes = run_batch(dataset, config, cfg.runs, workers=cfg.workers, progress=not args.quiet)
        elapsed = time.perf_counter() - start
        records = [o.record for o in outcomes if o.record is not None]
        failures = len(outcomes) - len(records)
        summary = aggregate(records, dataset.truth, k=cfg.topk) if records else None

        folder = dataio.ensure_folder(cfg.output_path)
        dataio.write_frame(folder / 'batch.csv', self.batch_frame(outcomes, summary))
        if summary is not None:
            histogram = pd.DataFrame({'bin_low': summary.bin_edges[:-1], 'bin_high': summary.bin_edges[1:], 'count': summary.rf_histogram})
            dataio.write_frame(folder / 'histogram.csv', histogram)
            dataio.write_trace(folder / 'convergence_best.csv', summary.best_trace)
        dataio.write_json(folder / 'summary.json', {
            'algorithm': config.algorithm.value,
            'succeeded': len(records),
            'failed': failures,
            'elapsed_s': round(elapsed, 3),
            **(summary.to_dict() if summary else {})
        })
        dataio.write_json(folder / 'manifest.json', base.manifest(self.name, cfg,
                                                                  lattice=list(dataset.lattice.shape),
                                                                  noise=dataset.noise_report(),
                                                                  solver=config.to_dict()))

        self.report(config.algorithm.value, summary, failures, elapsed)
        return EXIT_PARTIAL if failures else EXIT_OK

    @staticmethod
    def batch_frame(outcomes: list[RunOutcome], summary: BatchSummary | None) -> pd.DataFrame:
        """Une ligne par graine, succès comme échecs."""
        per_seed = {r.seed: r for r in summary.per_run} if summary else {}
        rows = []
        for outcome in outcomes:
            run = per_seed.get(outcome.seed)
            if run is None:
                rows.append((outcome.seed, 'failed', None, None, None, None, outcome.error))
            else:
                rows.append((run.seed, 'ok', run.best_rf, run.r_real, run.residual, run.iterations, None))
        return pd.DataFrame(rows, columns=BATCH_COLUMNS)

    @staticmethod
    def report(algorithm: str, summary: BatchSummary | None, failures: int, elapsed: float) -> None:
        if summary is None:
            print(f"**Erreur ·** Toutes les reconstructions ({algorithm}) ont échoué")
            return
        rows = [(r.seed, format_percent(r.best_rf, 4), format_percent(r.r_real, 4), f"{r.residual:.4g}") for r in summary.topk()]
        print(tabulate(rows, headers=['Graine', 'R_F', 'R_real', 'Résidu'], tablefmt='simple'))
        print(f"\n{algorithm} · {len(summary.per_run)} réussies, {failures} en échec, {humanize_duration(elapsed)}")
        print(f"Top {summary.k} : R_F = {format_percent(summary.rf_mean_topk, 4)} ± {format_percent(summary.rf_std_topk, 2)}")
        print(text_histogram(summary.rf_histogram, summary.bin_edges))

def setup(cli):
    cli.add_command(Batch(cli))
