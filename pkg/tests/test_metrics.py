import numpy as np
import pytest

from common import grid
from common.errors import DataError, LatticeMismatchError
from common.grid import Lattice
from common.metrics import aggregate, r_real, residual, rf_histogram, twin
from common.prox import MagnitudeData, magnitude_fidelity
from common.sim import embed
from common.solvers import Algorithm, RunRecord, SolverConfig, default_schedule


def fake_record(seed: int, best_rf: float, trace_length: int = 3) -> RunRecord:
    lattice = Lattice(4, 4)
    config = SolverConfig(Algorithm.HIO, default_schedule('hio', lattice, stages=1, iters_per_stage=trace_length), seed=seed)
    zeros = np.zeros(lattice.shape, dtype=np.complex128)
    trace = list(np.linspace(best_rf + 0.1, best_rf, trace_length))
    return RunRecord(rf_trace=trace,
                     best_rf=best_rf,
                     best_iterate=zeros,
                     final_image=zeros,
                     density=zeros,
                     residual=best_rf * 10,
                     iterations_run=trace_length,
                     config_echo=config,
                     sigma_trace=[0.0] * trace_length,
                     gamma_trace=[0.0] * trace_length,
                     stage_trace=[0] * trace_length)


# Résidu ------------------------------------------------------

def test_residual_hand_arithmetic():
    data = MagnitudeData(np.array([[3.0, 4.0], [7.0, 0.0]]), np.array([[True, True], [False, True]]))
    assert residual(np.zeros((2, 2)), data) == pytest.approx(5.0)
    assert residual(data.b, data) == 0

def test_residual_real_domain(noiseless, truth_density, rng):
    assert residual(truth_density, noiseless, domain='real') == pytest.approx(0.0, abs=1e-12)
    u = rng.uniform(size=truth_density.shape)
    assert residual(u, noiseless, domain='real') == pytest.approx(residual(grid.dft2(u), noiseless))

def test_residual_matches_fidelity(noiseless, rng):
    z = rng.normal(size=noiseless.b.shape) + 1j * rng.normal(size=noiseless.b.shape)
    for sigma in (0.01, 1.0, 7.5):
        assert residual(z, noiseless) ** 2 == pytest.approx(2 * sigma * magnitude_fidelity(z, noiseless, sigma))

def test_residual_lattice_mismatch(noiseless):
    with pytest.raises(LatticeMismatchError):
        residual(np.zeros((3, 3)), noiseless)


# R_real ------------------------------------------------------

def test_r_real_of_truth_is_zero(vesicle, truth_density):
    assert r_real(truth_density, vesicle) == 0

def test_r_real_is_twin_invariant(vesicle, truth_density):
    assert r_real(twin(truth_density), vesicle) == 0

def test_r_real_is_translation_invariant(vesicle, truth_density):
    assert r_real(np.roll(truth_density, (1, -2), axis=(0, 1)), vesicle) == 0

def test_r_real_of_scaled_truth(vesicle, truth_density):
    assert r_real(1.1 * truth_density, vesicle) == pytest.approx(0.1, abs=1e-12)

def test_r_real_accepts_full_lattice_truth(vesicle, truth_density):
    from common.sim import Phantom
    assert r_real(truth_density, Phantom(embed(vesicle.density, Lattice(32, 32)))) == 0

def test_r_real_lattice_mismatch(vesicle, truth_density):
    with pytest.raises(LatticeMismatchError):
        r_real(truth_density, vesicle, np.ones((8, 8), dtype=bool))

def test_twin_is_an_involution(rng):
    u = rng.normal(size=(7, 6)) + 1j * rng.normal(size=(7, 6))
    assert np.array_equal(twin(twin(u)), u)
    assert twin(u)[3, 3] == np.conj(u[3, 3])


# Agrégation --------------------------------------------------

def test_aggregate_topk():
    rfs = [0.30, 0.05, 0.20, 0.10, 0.40, 0.01, 0.15]
    runs = [fake_record(seed, rf) for seed, rf in enumerate(rfs)]
    summary = aggregate(runs, k=5)
    best5 = sorted(rfs)[:5]
    assert summary.rf_mean_topk == pytest.approx(np.mean(best5))
    assert summary.rf_std_topk == pytest.approx(np.std(best5))
    assert summary.best_seed == 5
    assert [r.seed for r in summary.per_run] == list(range(7))
    assert summary.rf_histogram.sum() == 7
    assert summary.best_trace[-1][1] == pytest.approx(0.01)

def test_aggregate_is_permutation_invariant():
    runs = [fake_record(seed, rf) for seed, rf in enumerate([0.3, 0.1, 0.2, 0.4])]
    forward = aggregate(runs, k=2)
    backward = aggregate(runs[::-1], k=2)
    assert forward.rf_mean_topk == backward.rf_mean_topk
    assert forward.rf_std_topk == backward.rf_std_topk
    assert forward.to_dict() == backward.to_dict()

def test_aggregate_single_run():
    summary = aggregate([fake_record(3, 0.2)], k=1)
    assert summary.rf_mean_topk == 0.2
    assert summary.rf_std_topk == 0

def test_aggregate_identical_runs_share_one_bin():
    summary = aggregate([fake_record(s, 0.2) for s in range(6)], k=3)
    assert summary.rf_histogram.max() == 6

def test_aggregate_clamps_k_and_rejects_empty():
    summary = aggregate([fake_record(0, 0.2), fake_record(1, 0.3)], k=5)
    assert summary.k == 2
    with pytest.raises(DataError):
        aggregate([], k=5)
    with pytest.raises(ValueError):
        aggregate([fake_record(0, 0.2)], k=0)

def test_aggregate_with_truth_reports_r_real(vesicle, truth_density):
    record = fake_record(0, 0.1)
    record.density = truth_density.astype(np.complex128)
    summary = aggregate([record], vesicle, k=1)
    assert summary.per_run[0].r_real == 0
    assert summary.r_real_mean_topk == 0

def test_rf_histogram_fixed_width():
    counts, edges = rf_histogram(np.linspace(0, 1, 200))
    widths = np.diff(edges)
    assert counts.sum() == 200
    assert np.allclose(widths, widths[0])
