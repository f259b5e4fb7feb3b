import json

import numpy as np
import pandas as pd
import pytest

from common import dataio, grid
from common.errors import EXIT_DATA, EXIT_OK, EXIT_PARTIAL, EXIT_USAGE
from gpspr import CLI

SMALL = ['--object-size', '16', '--phantom-seed', '3']
QUICK = ['--iterations', '20', '--stages', '2']


@pytest.fixture
def cli() -> CLI:
    instance = CLI(config={})
    instance.load_commands()
    return instance

@pytest.fixture
def simulated(cli, tmp_path):
    folder = tmp_path / 'sim'
    assert cli.run(['-q', 'simulate', *SMALL, '--flux', '1e7', '--noise-seed', '1', '--output', str(folder)]) == EXIT_OK
    return folder


def test_all_commands_are_loaded(cli):
    assert set(cli.commands) == {'simulate', 'reconstruct', 'batch', 'metrics', 'export', 'convert'}


# simulate ----------------------------------------------------

def test_simulate_writes_dataset(simulated):
    for name in ('truth.raw', 'magnitudes.raw', 'datamask.raw', 'support.raw', 'manifest.json'):
        assert (simulated / name).exists()
    manifest = dataio.read_json(simulated / 'manifest.json')
    assert manifest['command'] == 'simulate'
    assert manifest['config']['flux'] == 1e7
    assert manifest['lattice'] == [32, 32]
    assert 0 < manifest['noise']['r_noise'] < 1

def test_simulate_without_noise_is_exact(cli, tmp_path):
    assert cli.run(['-q', 'simulate', *SMALL, '--no-noise', '--output', str(tmp_path)]) == EXIT_OK
    truth = dataio.read_raw(tmp_path / 'truth.raw')
    assert np.array_equal(dataio.read_raw(tmp_path / 'magnitudes.raw'), np.abs(grid.dft2(truth)))

def test_simulate_is_deterministic(cli, tmp_path, simulated):
    other = tmp_path / 'again'
    cli.run(['-q', 'simulate', *SMALL, '--flux', '1e7', '--noise-seed', '1', '--output', str(other)])
    for name in ('truth.raw', 'magnitudes.raw', 'datamask.raw', 'support.raw'):
        assert (other / name).read_bytes() == (simulated / name).read_bytes()

def test_simulate_calibrates_noise(cli, tmp_path):
    assert cli.run(['-q', 'simulate', *SMALL, '--target-rnoise', '0.05', '--output', str(tmp_path)]) == EXIT_OK
    manifest = dataio.read_json(tmp_path / 'manifest.json')
    assert 0.045 <= manifest['noise']['r_noise'] <= 0.055
    assert manifest['config']['flux'] == manifest['noise']['flux']

def test_simulate_rejects_magnitudes_option(cli, tmp_path):
    assert cli.run(['-q', 'simulate', '--magnitudes', 'x.raw', '--output', str(tmp_path)]) == EXIT_USAGE


# reconstruct -------------------------------------------------

def test_reconstruct_from_phantom(cli, tmp_path):
    assert cli.run(['-q', 'reconstruct', *SMALL, *QUICK, '--no-noise', '--output', str(tmp_path)]) == EXIT_OK
    trace = pd.read_csv(tmp_path / 'rf_trace.csv')
    assert list(trace.columns) == ['iteration', 'rf', 'sigma', 'gamma', 'stage']
    assert len(trace) == 20
    metrics = json.loads((tmp_path / 'metrics.json').read_text())
    assert metrics['algorithm'] == 'gps-f'
    assert metrics['best_rf'] == pytest.approx(trace['rf'].min())
    assert metrics['r_real'] is not None
    assert dataio.read_raw(tmp_path / 'recon.raw').shape == (32, 32)

def test_reconstruct_from_files(cli, tmp_path, simulated):
    out = tmp_path / 'recon'
    code = cli.run(['-q', 'reconstruct', '--algorithm', 'hio', *QUICK,
                    '--magnitudes', str(simulated / 'magnitudes.raw'),
                    '--datamask', str(simulated / 'datamask.raw'),
                    '--support-file', str(simulated / 'support.raw'),
                    '--truth', str(simulated / 'truth.raw'),
                    '--output', str(out)])
    assert code == EXIT_OK
    metrics = dataio.read_json(out / 'metrics.json')
    assert metrics['algorithm'] == 'hio'
    assert metrics['r_real'] >= 0

def test_er_from_truth_phase(cli, tmp_path):
    assert cli.run(['-q', 'simulate', *SMALL, '--no-noise', '--output', str(tmp_path)]) == EXIT_OK
    out = tmp_path / 'er'
    code = cli.run(['-q', 'reconstruct', *SMALL, '--no-noise', '--algorithm', 'er', '--iterations', '5', '--stages', '1',
                    '--init', str(tmp_path / 'truth.raw'), '--output', str(out)])
    assert code == EXIT_OK
    assert dataio.read_json(out / 'metrics.json')['best_rf'] < 1e-10

@pytest.mark.parametrize('algorithm', ['gps-r', 'gps-rf'])
def test_reconstruct_with_real_space_smoothing(cli, tmp_path, algorithm):
    assert cli.run(['-q', 'reconstruct', *SMALL, *QUICK, '--no-noise', '--algorithm', algorithm, '--output', str(tmp_path)]) == EXIT_OK
    assert len(pd.read_csv(tmp_path / 'rf_trace.csv')) == 20

def test_reconstruct_with_footprint_support(cli, tmp_path):
    assert cli.run(['-q', 'simulate', *SMALL, '--no-noise', '--support-shape', 'footprint', '--output', str(tmp_path)]) == EXIT_OK
    support = dataio.read_mask(tmp_path / 'support.raw')
    truth = dataio.read_raw(tmp_path / 'truth.raw')
    assert support.sum() < 16 * 16
    assert np.all(support[truth > 0])
    assert dataio.read_json(tmp_path / 'manifest.json')['config']['support_shape'] == 'footprint'

def test_unknown_support_shape_is_a_usage_error(cli, tmp_path):
    assert cli.run(['simulate', '--support-shape', 'disc', '--output', str(tmp_path)]) == EXIT_USAGE

def test_unknown_algorithm_is_a_usage_error(cli, tmp_path, capsys):
    assert cli.run(['reconstruct', '--algorithm', 'gps-x', '--output', str(tmp_path)]) == EXIT_USAGE
    assert 'gps-' in capsys.readouterr().err

def test_iterations_must_divide_stages(cli, tmp_path):
    assert cli.run(['reconstruct', '--iterations', '15', '--stages', '10', '--output', str(tmp_path)]) == EXIT_USAGE

def test_bad_option_is_a_usage_error(cli):
    assert cli.run(['reconstruct', '--not-an-option']) == EXIT_USAGE
    assert cli.run([]) == EXIT_USAGE

def test_missing_files_are_data_errors(cli, tmp_path):
    code = cli.run(['reconstruct', '--magnitudes', str(tmp_path / 'absent.raw'),
                    '--support-file', str(tmp_path / 'absent.raw'), '--output', str(tmp_path)])
    assert code == EXIT_DATA

def test_config_file_merges_under_flags(cli, tmp_path):
    config = tmp_path / 'config.json'
    config.write_text(json.dumps({'algorithm': 'er', 'iterations': 10, 'stages': 2, 'object_size': '16', 'no_noise': True}))
    out = tmp_path / 'out'
    assert cli.run(['-q', 'reconstruct', '--config', str(config), '--algorithm', 'hio', '--output', str(out)]) == EXIT_OK
    manifest = dataio.read_json(out / 'manifest.json')
    assert manifest['config']['algorithm'] == 'hio'
    assert manifest['config']['iterations'] == 10

def test_unknown_config_key(cli, tmp_path):
    config = tmp_path / 'config.json'
    config.write_text(json.dumps({'algoritm': 'er'}))
    assert cli.run(['reconstruct', '--config', str(config)]) == EXIT_USAGE

def test_env_defaults(tmp_path):
    instance = CLI(config={'GPSPR_OUTPUT': str(tmp_path / 'from-env')})
    instance.load_commands()
    assert instance.run(['-q', 'reconstruct', *SMALL, *QUICK, '--no-noise']) == EXIT_OK
    assert (tmp_path / 'from-env' / 'metrics.json').exists()


# batch -------------------------------------------------------

def batch_args(folder, *extra):
    return ['-q', 'batch', *SMALL, *QUICK, '--flux', '1e7', '--runs', '3', '--topk', '2', '--output', str(folder), *extra]

def test_batch_outputs(cli, tmp_path):
    assert cli.run(batch_args(tmp_path)) == EXIT_OK
    batch = pd.read_csv(tmp_path / 'batch.csv')
    assert list(batch.columns) == ['seed', 'status', 'best_rf', 'r_real', 'residual', 'iterations', 'error']
    assert list(batch['seed']) == [0, 1, 2]
    assert (batch['status'] == 'ok').all()
    assert pd.read_csv(tmp_path / 'histogram.csv')['count'].sum() == 3
    assert len(pd.read_csv(tmp_path / 'convergence_best.csv')) == 20
    summary = dataio.read_json(tmp_path / 'summary.json')
    assert summary['k'] == 2
    assert summary['rf_mean_topk'] == pytest.approx(batch['best_rf'].nsmallest(2).mean())

def test_batch_is_independent_of_workers(cli, tmp_path):
    cli.run(batch_args(tmp_path / 'one', '--runs', '8', '--workers', '1'))
    cli.run(batch_args(tmp_path / 'eight', '--runs', '8', '--workers', '8'))
    assert (tmp_path / 'one' / 'batch.csv').read_bytes() == (tmp_path / 'eight' / 'batch.csv').read_bytes()

def test_single_run_batch_matches_reconstruct(cli, tmp_path):
    cli.run(['-q', 'batch', *SMALL, *QUICK, '--flux', '1e7', '--runs', '1', '--seed', '4', '--output', str(tmp_path / 'b')])
    cli.run(['-q', 'reconstruct', *SMALL, *QUICK, '--flux', '1e7', '--seed', '4', '--output', str(tmp_path / 'r')])
    row = pd.read_csv(tmp_path / 'b' / 'batch.csv').iloc[0]
    metrics = dataio.read_json(tmp_path / 'r' / 'metrics.json')
    assert row['best_rf'] == pytest.approx(metrics['best_rf'], rel=1e-14)
    assert row['r_real'] == pytest.approx(metrics['r_real'], rel=1e-14)
    assert row['residual'] == pytest.approx(metrics['residual'], rel=1e-14)

def test_batch_replays_from_manifest(cli, tmp_path):
    cli.run(batch_args(tmp_path / 'first'))
    cli.run(['-q', 'batch', '--config', str(tmp_path / 'first' / 'manifest.json'), '--output', str(tmp_path / 'replay')])
    assert (tmp_path / 'first' / 'batch.csv').read_bytes() == (tmp_path / 'replay' / 'batch.csv').read_bytes()

def test_batch_failures_set_partial_exit_code(cli, tmp_path):
    code = cli.run(batch_args(tmp_path, '--step-s', '1e300', '--step-t', '1e300', '--gamma-schedule', '0,0'))
    assert code == EXIT_PARTIAL
    batch = pd.read_csv(tmp_path / 'batch.csv')
    assert (batch['status'] == 'failed').all()
    assert batch['error'].str.contains('Divergence').all()


# metrics, export, convert ------------------------------------

def test_metrics_command(cli, tmp_path, simulated):
    out = tmp_path / 'metrics.json'
    code = cli.run(['-q', 'metrics', str(simulated / 'truth.raw'),
                    '--magnitudes', str(simulated / 'magnitudes.raw'),
                    '--datamask', str(simulated / 'datamask.raw'),
                    '--truth', str(simulated / 'truth.raw'),
                    '--output', str(out)])
    assert code == EXIT_OK
    values = dataio.read_json(out)
    assert values['r_real'] == 0
    assert values['rf'] == pytest.approx(dataio.read_json(simulated / 'manifest.json')['noise']['r_noise'], rel=0.1)
    assert values['residual'] > 0

def test_export_command(cli, tmp_path, simulated):
    out = tmp_path / 'pattern.pgm'
    assert cli.run(['-q', 'export', str(simulated / 'magnitudes.raw'), '--output', str(out), '--scale', 'log', '--shift']) == EXIT_OK
    assert dataio.read_image(out).max() == dataio.PGM_MAXVAL

def test_convert_command(cli, tmp_path):
    source = tmp_path / 'mask.csv'
    source.write_text('0,1\n1,0\n')
    assert cli.run(['-q', 'convert', str(source), '--output', str(tmp_path / 'mask.raw'), '--mask']) == EXIT_OK
    assert np.array_equal(dataio.read_mask(tmp_path / 'mask.raw'), [[False, True], [True, False]])
