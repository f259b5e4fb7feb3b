import logging

import numpy as np
import pytest

from common import dataio, grid, sim
from common.errors import CalibrationError, DataError, LatticeMismatchError
from common.grid import Lattice
from common.metrics import twin
from common.sim import NoiseSpec, Phantom, footprint_support, make_phantom, oversample, r_noise, simulate_magnitudes
from common.solvers import rf_factor


# Fantômes ----------------------------------------------------

def test_vesicle_is_deterministic():
    first = make_phantom('vesicle', Lattice(64, 64), seed=7)
    second = make_phantom('vesicle', Lattice(64, 64), seed=7)
    assert np.array_equal(first.density, second.density)
    assert not np.array_equal(first.density, make_phantom('vesicle', Lattice(64, 64), seed=8).density)

def test_vesicle_is_not_centrosymmetric():
    p = make_phantom('vesicle', Lattice(64, 64), seed=0)
    field, _ = oversample(p, 2)
    assert np.abs(twin(field).real - field.real).max() > 0.2

@pytest.mark.parametrize('kind', ['vesicle', 'disks'])
def test_phantoms_are_nonnegative(kind):
    p = make_phantom(kind, Lattice(32, 24), seed=1)
    assert p.density.shape == (32, 24)
    assert p.density.min() >= 0
    assert p.density.max() == pytest.approx(1.0)

@pytest.mark.parametrize('seed', range(10))
def test_disks_coverage(seed):
    p = make_phantom('disks', Lattice(32, 32), seed=seed)
    coverage = np.mean(p.density > 0)
    assert 0.05 <= coverage <= 0.6

def test_phantom_size_limit():
    with pytest.raises(DataError):
        make_phantom('vesicle', Lattice(8, 32))
    with pytest.raises(DataError):
        make_phantom('sphere', Lattice(32, 32)) # type: ignore

def test_custom_file_phantom(tmp_path):
    values = np.array([[1.0, -2.0], [0.5, 0.0]])
    path = dataio.write_raw(tmp_path / 'object.raw', values)
    p = make_phantom('custom-file', path=path)
    assert np.array_equal(p.density, np.array([[1.0, 0.0], [0.5, 0.0]]))
    assert p.name == 'object'
    with pytest.raises(LatticeMismatchError):
        make_phantom('custom-file', Lattice(4, 4), path=path)
    with pytest.raises(DataError):
        make_phantom('custom-file', path=tmp_path / 'absent.raw')

def test_phantom_invariants():
    with pytest.raises(DataError):
        Phantom(np.zeros((4, 4)))
    with pytest.raises(DataError):
        Phantom(-np.ones((4, 4)))


# Suréchantillonnage ------------------------------------------

def test_oversample_embeds_centered():
    p = make_phantom('vesicle', Lattice(64, 64), seed=0)
    field, support = oversample(p, 2)
    assert field.shape == (128, 128)
    assert support.sum() == 64 * 64
    assert support[32:96, 32:96].all()
    assert np.array_equal(field[32:96, 32:96].real, p.density)
    assert field.real.sum() == pytest.approx(p.density.sum())

def test_oversample_margin_and_ratios():
    p = make_phantom('disks', Lattice(64, 64), seed=0)
    _, support = oversample(p, 2, margin=2)
    assert support.sum() == 68 * 68
    assert support[30:98, 30:98].all()
    field, _ = oversample(p, (2.0, 2.5))
    assert field.shape == (128, 160)

def test_footprint_support_hugs_the_object():
    p = make_phantom('vesicle', Lattice(64, 64), seed=0)
    field, support = oversample(p, 2, shape='footprint')
    assert np.array_equal(support, field.real > 0)
    assert support.sum() < 64 * 64
    assert not np.array_equal(support, twin(support.astype(np.float64)).real > 0)
    _, wider = oversample(p, 2, margin=2, shape='footprint')
    assert np.all(wider[support])
    assert wider.sum() > support.sum()

def test_footprint_support_dilation():
    density = np.zeros((9, 9))
    density[4, 4] = 1.0
    mask = footprint_support(density, margin=1)
    assert mask.sum() == 5
    assert mask[3, 4] and mask[4, 3] and not mask[3, 3]
    with pytest.raises(DataError):
        footprint_support(density, margin=-1)

def test_oversample_rejects_unknown_support_shape():
    with pytest.raises(DataError):
        oversample(make_phantom('disks', Lattice(16, 16), seed=0), 2, shape='disc') # type: ignore

def test_oversample_rejects_small_ratios(caplog):
    p = make_phantom('disks', Lattice(16, 16), seed=0)
    with pytest.raises(DataError):
        oversample(p, 0.5)
    with caplog.at_level(logging.WARNING, logger='GPSPR'):
        field, _ = oversample(p, 1.5)
    assert field.shape == (24, 24)
    assert any('suréchantillonnage' in r.message for r in caplog.records)


# Bruit -------------------------------------------------------

def test_noiseless_magnitudes_are_exact(truth_density):
    data = simulate_magnitudes(truth_density, None, 0.0)
    assert np.array_equal(data.b, np.abs(grid.dft2(truth_density)))
    assert data.measured.all()
    assert rf_factor(grid.dft2(truth_density), data) == 0
    assert r_noise(data, truth_density) == 0

def test_beamstop_mask(truth_density):
    data = simulate_magnitudes(truth_density, NoiseSpec(flux=1e6, seed=1), beamstop_radius=5)
    k = grid.frequency_radius(Lattice.of(truth_density))
    assert np.array_equal(data.measured, k >= 5)
    assert np.all(data.b[~data.measured] == 0)
    assert np.all(data.b >= 0)

def test_noise_is_deterministic_per_seed(truth_density):
    first = simulate_magnitudes(truth_density, NoiseSpec(flux=1e5, readout_sigma=1.0, seed=3))
    second = simulate_magnitudes(truth_density, NoiseSpec(flux=1e5, readout_sigma=1.0, seed=3))
    other = simulate_magnitudes(truth_density, NoiseSpec(flux=1e5, readout_sigma=1.0, seed=4))
    assert np.array_equal(first.b, second.b)
    assert not np.array_equal(first.b, other.b)

def test_huge_flux_is_nearly_noiseless(truth_density):
    data = simulate_magnitudes(truth_density, NoiseSpec(flux=1e12, seed=0))
    assert r_noise(data, truth_density) < 1e-3

def test_rnoise_decreases_with_flux(truth_density):
    medians = []
    for flux in (1e4, 1e6, 1e8):
        values = [r_noise(simulate_magnitudes(truth_density, NoiseSpec(flux=flux, seed=s)), truth_density) for s in range(10)]
        medians.append(np.median(values))
    assert medians[0] > medians[1] > medians[2]

def test_rnoise_of_doubled_magnitudes(noiseless, truth_density):
    doubled = type(noiseless)(2 * noiseless.b, noiseless.measured)
    assert r_noise(doubled, truth_density) == pytest.approx(1.0)

def test_simulate_rejects_negative_density():
    with pytest.raises(DataError):
        simulate_magnitudes(-np.ones((4, 4)))

def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(flux=0.0)
    with pytest.raises(ValueError):
        NoiseSpec(readout_sigma=-1.0)
    assert not NoiseSpec(poisson_enabled=False).enabled


# Calibration -------------------------------------------------

def test_calibrate_flux_reaches_target(truth_density):
    flux, achieved = sim.calibrate_flux(truth_density, 0.05, seed=2)
    assert 0.045 <= achieved <= 0.055
    assert flux > 0

def test_calibrate_flux_reports_unreachable_target(truth_density):
    with pytest.raises(CalibrationError) as info:
        sim.calibrate_flux(truth_density, 1e-9, log_range=(1.0, 4.0))
    assert info.value.achieved > 1e-9
