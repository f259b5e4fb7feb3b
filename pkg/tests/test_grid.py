import numpy as np
import pytest

from common import grid
from common.errors import DataError, LatticeMismatchError
from common.grid import Lattice


def naive_dft2(u: np.ndarray) -> np.ndarray:
    n1, n2 = u.shape
    f1 = np.exp(-2j * np.pi * np.outer(np.arange(n1), np.arange(n1)) / n1) / np.sqrt(n1)
    f2 = np.exp(-2j * np.pi * np.outer(np.arange(n2), np.arange(n2)) / n2) / np.sqrt(n2)
    return f1 @ u @ f2.T


# Réseau ------------------------------------------------------

def test_lattice_parse():
    assert Lattice.parse('64x48') == Lattice(64, 48)
    assert Lattice.parse('32') == Lattice(32, 32)
    assert Lattice.parse('8×4').shape == (8, 4)
    with pytest.raises(DataError):
        Lattice.parse('abc')

def test_lattice_rejects_degenerate_shapes():
    with pytest.raises(DataError):
        Lattice(1, 4)
    with pytest.raises(DataError):
        Lattice.of(np.zeros(5))

def test_lattice_coerces_integral_floats():
    lattice = Lattice(64.0, 32.0) # type: ignore
    assert lattice.shape == (64, 32)
    assert all(type(n) is int for n in lattice.shape)
    assert np.zeros(lattice.shape).shape == (64, 32)
    assert lattice == Lattice(64, 32)

def test_lattice_rejects_fractional_dims():
    with pytest.raises(DataError):
        Lattice(64.5, 32) # type: ignore

def test_lattice_center_and_size():
    lattice = Lattice(5, 4)
    assert lattice.center == (2, 2)
    assert lattice.size == 20

def test_check_same_lattice_mismatch():
    with pytest.raises(LatticeMismatchError):
        grid.check_same_lattice(np.zeros((4, 4)), np.zeros((4, 5)))

def test_check_support_rejects_trivial_masks():
    with pytest.raises(DataError):
        grid.check_support(np.zeros((4, 4), dtype=bool))
    with pytest.raises(DataError):
        grid.check_support(np.ones((4, 4), dtype=bool))
    with pytest.raises(LatticeMismatchError):
        grid.check_support(np.eye(4, dtype=bool), Lattice(4, 5))


# Transformées ------------------------------------------------

def test_dft2_matches_naive_unitary_dft(rng):
    u = rng.normal(size=(6, 5)) + 1j * rng.normal(size=(6, 5))
    assert np.allclose(grid.dft2(u), naive_dft2(u), atol=1e-12)

def test_dft_pair_is_unitary(rng):
    u = rng.normal(size=(8, 6)) + 1j * rng.normal(size=(8, 6))
    z = grid.dft2(u)
    assert np.allclose(grid.idft2(z), u, atol=1e-12)
    assert np.linalg.norm(z) == pytest.approx(np.linalg.norm(u), rel=1e-12)

def test_dft2_of_real_input_is_complex128():
    assert grid.dft2(np.ones((4, 4))).dtype == np.complex128


# Cartes radiales ---------------------------------------------

def test_radial_map_is_centered():
    r = grid.radial_map(Lattice(5, 4))
    assert r[2, 2] == 0
    assert r[0, 0] == pytest.approx(np.hypot(2, 2))
    assert not r.flags.writeable

def test_frequency_radius_has_dc_at_origin():
    k = grid.frequency_radius(Lattice(8, 8))
    assert k[0, 0] == 0
    assert k[0, 1] == 1 and k[0, 7] == 1
    assert k[4, 0] == 4

def test_angular_frequencies_layout():
    w1, w2 = grid.angular_frequencies(Lattice(8, 6))
    assert w1.shape == (8, 1) and w2.shape == (1, 6)
    assert w1[0, 0] == 0 and w2[0, 0] == 0
    assert w1[1, 0] == pytest.approx(2 * np.pi / 8)
    assert w2[0, -1] == pytest.approx(-2 * np.pi / 6)

def test_angular_frequencies_match_frequency_radius():
    lattice = Lattice(8, 8)
    w1, w2 = grid.angular_frequencies(lattice)
    assert np.allclose(np.hypot(w1, w2) * 8 / (2 * np.pi), grid.frequency_radius(lattice), atol=1e-12)


# Filtres -----------------------------------------------------

def test_gaussian_lowpass_preserves_dc(rng):
    u = rng.uniform(size=(16, 16))
    smoothed = grid.gaussian_lowpass(u, 3.0, domain='real')
    assert smoothed.real.sum() == pytest.approx(u.sum(), rel=1e-12)
    assert np.abs(smoothed.imag).max() < 1e-12

def test_gaussian_lowpass_fourier_is_a_multiplication(rng):
    z = rng.normal(size=(8, 8)) + 0j
    assert np.allclose(grid.gaussian_lowpass(z, 2.0), z * grid.lowpass_multiplier(Lattice(8, 8), 2.0))

def test_lowpass_rejects_nonpositive_cutoff():
    with pytest.raises(ValueError):
        grid.gaussian_lowpass(np.ones((4, 4)), 0.0)
    with pytest.raises(ValueError):
        grid.gaussian_lowpass(np.ones((4, 4)), 1.0, domain='time')

def test_heat_kernel_matches_spatial_gaussian():
    lattice = Lattice(64, 64)
    tau = 4.0
    delta = np.zeros(lattice.shape)
    delta[32, 32] = 1.0
    smoothed = grid.idft2(grid.dft2(delta) * grid.heat_multiplier(lattice, tau)).real
    r2 = grid.radial_map(lattice) ** 2
    expected = np.exp(-r2 / (4 * tau)) / (4 * np.pi * tau)
    assert np.allclose(smoothed, expected, atol=1e-10)

def test_laplacian_eigenvalues_match_five_point_stencil(rng):
    u = rng.normal(size=(8, 6))
    stencil = 4 * u - np.roll(u, 1, 0) - np.roll(u, -1, 0) - np.roll(u, 1, 1) - np.roll(u, -1, 1)
    spectral = grid.idft2(grid.dft2(u) * grid.laplacian_eigenvalues(Lattice(8, 6))).real
    assert np.allclose(spectral, stencil, atol=1e-12)

@pytest.mark.parametrize('s', [1.0, 0.9])
def test_gamma_from_cutoff_matches_lowpass(s):
    lattice = Lattice(32, 32)
    gamma = grid.gamma_from_cutoff(6.0, lattice, s)
    assert np.allclose(grid.heat_multiplier(lattice, s * gamma), grid.lowpass_multiplier(lattice, 6.0), atol=1e-12)

def test_heat_multiplier_rejects_negative_time():
    with pytest.raises(ValueError):
        grid.heat_multiplier(Lattice(4, 4), -1.0)
