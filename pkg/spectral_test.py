import math

import hypothesis
from hypothesis import strategies
import numpy as np
import pytest

import spectral
from spectral import CorruptFieldError, NormSpec, make_grid


def gaussian(grid, width=1.0):
    return np.exp(-grid.r2 / width ** 2).astype(complex)


def test_make_grid_validation():
    with pytest.raises(ValueError):
        make_grid(1, 100, 10.0)
    with pytest.raises(ValueError):
        make_grid(3, 16, 10.0)
    with pytest.raises(ValueError):
        make_grid(1, 64, -1.0)
    with pytest.raises(ValueError):
        make_grid(1, 8, 10.0)
    assert make_grid(2, 16, 4.0).shape == (16, 16)


def test_grid_equality():
    assert make_grid(1, 64, 10.0) == make_grid(1, 64, 10)
    assert make_grid(1, 64, 10.0) != make_grid(1, 128, 10.0)
    assert len({make_grid(1, 64, 10.0), make_grid(1, 64, 10.0)}) == 1


def test_check_field():
    grid = make_grid(1, 16, 1.0)
    with pytest.raises(ValueError):
        grid.check_field(np.zeros(8))
    bad = grid.zeros()
    bad[3] = np.nan
    with pytest.raises(CorruptFieldError):
        grid.check_field(bad)
    assert grid.check_field(np.ones(16)).dtype == complex


def test_parseval():
    grid = make_grid(1, 128, 20.0)
    rng = np.random.default_rng(1)
    u = rng.normal(size=128) + 1j * rng.normal(size=128)
    assert math.isclose(np.sum(np.abs(grid.fft(u)) ** 2), np.sum(np.abs(u) ** 2), rel_tol=1e-12)


def test_batched_transform():
    grid = make_grid(2, 16, 4.0)
    rng = np.random.default_rng(2)
    stack = rng.normal(size=(3, 16, 16)) + 0j
    batched = grid.fft(stack)
    for j in range(3):
        np.testing.assert_allclose(batched[j], grid.fft(stack[j]), atol=1e-12)


def test_free_gaussian_matches_closed_form():
    grid = make_grid(1, 512, 64.0)
    u0 = gaussian(grid)
    # Spreading past t=0.5 wraps around the box.
    for t in (0.1, 0.25, 0.5):
        exact = (1 + 4j * t) ** -0.5 * np.exp(-grid.x ** 2 / (1 + 4j * t))
        np.testing.assert_allclose(grid.free_propagate(u0, t), exact, atol=1e-10)


def test_free_propagate_zero_time_copies():
    grid = make_grid(1, 32, 8.0)
    u = gaussian(grid)
    v = grid.free_propagate(u, 0.0)
    assert v is not u
    np.testing.assert_array_equal(v, u)


@hypothesis.settings(deadline=None, max_examples=25)
@hypothesis.given(
    strategies.floats(min_value=-10, max_value=10, allow_nan=False),
    strategies.integers(min_value=0, max_value=2 ** 32 - 1),
)
def test_free_flow_is_unitary_and_reversible(t, seed):
    grid = make_grid(1, 64, 16.0)
    rng = np.random.default_rng(seed)
    u = rng.normal(size=64) + 1j * rng.normal(size=64)
    v = grid.free_propagate(u, t)
    assert math.isclose(grid.mass(v), grid.mass(u), rel_tol=1e-12)
    np.testing.assert_allclose(grid.free_propagate(v, -t), u, atol=1e-11)


def test_fourier_transform_of_gaussian_1d():
    grid = make_grid(1, 512, 64.0)
    u = np.exp(-grid.x ** 2 / 2)
    np.testing.assert_allclose(grid.fourier_transform(u), np.exp(-grid.xi ** 2 / 2), atol=1e-10)


def test_fourier_transform_of_shifted_gaussian():
    grid = make_grid(1, 512, 64.0)
    u = np.exp(-(grid.x - 3) ** 2 / 2)
    expected = np.exp(-3j * grid.xi) * np.exp(-grid.xi ** 2 / 2)
    np.testing.assert_allclose(grid.fourier_transform(u), expected, atol=1e-10)


def test_fourier_transform_of_gaussian_2d():
    grid = make_grid(2, 64, 32.0)
    u = np.exp(-grid.r2 / 2)
    np.testing.assert_allclose(grid.fourier_transform(u), np.exp(-grid.k2 / 2), atol=1e-7)


def test_fourier_transform_is_unitary_on_samples():
    grid = make_grid(1, 256, 32.0)
    u = gaussian(grid, 2.0) * np.exp(1j * grid.x)
    uhat = grid.fourier_transform(u)
    assert math.isclose(np.sum(np.abs(uhat) ** 2) * grid.dual_cell_volume, grid.mass(u), rel_tol=1e-12)


def test_gradient_and_laplacian_of_plane_wave():
    grid = make_grid(1, 64, 2 * np.pi)
    u = np.exp(3j * grid.x)
    [du] = grid.gradient(u)
    np.testing.assert_allclose(du, 3j * u, atol=1e-12)
    np.testing.assert_allclose(grid.laplacian(u), -9 * u, atol=1e-11)
    assert math.isclose(grid.kinetic(u), 9 / 2 * grid.mass(u), rel_tol=1e-12)


def test_gradient_2d():
    grid = make_grid(2, 32, 2 * np.pi)
    x, y = grid.coords
    u = np.sin(2 * x) * np.cos(y) + 0j
    dx, dy = grid.gradient(u)
    np.testing.assert_allclose(dx, 2 * np.cos(2 * x) * np.cos(y), atol=1e-12)
    np.testing.assert_allclose(dy, -np.sin(2 * x) * np.sin(y), atol=1e-12)


def test_galilean_operator_conjugates_x():
    # J(t)e^{itΔ}u0 = e^{itΔ}(x u0)
    grid = make_grid(1, 1024, 128.0)
    u0 = gaussian(grid)
    t = 1.5
    [ju] = grid.galilean_apply(grid.free_propagate(u0, t), t)
    np.testing.assert_allclose(ju, grid.free_propagate(grid.x * u0, t), atol=1e-9)


def test_fractional_galilean_at_one_matches_full_operator():
    grid = make_grid(1, 2048, 128.0)
    t = 2.0
    u = grid.free_propagate(gaussian(grid), t)
    [ju] = grid.galilean_apply(u, t)
    frac = grid.fractional_galilean(u, t, 1.0)
    assert math.isclose(math.sqrt(grid.mass(frac)), math.sqrt(grid.mass(ju)), rel_tol=1e-6)


def test_fractional_galilean_conjugates_weight():
    # ‖J^γ(t)e^{itΔ}u0‖ = ‖|x|^γ u0‖
    grid = make_grid(1, 2048, 128.0)
    t, gamma = 2.0, 0.5
    u0 = gaussian(grid)
    frac = grid.fractional_galilean(grid.free_propagate(u0, t), t, gamma)
    expected = grid.norm(u0, NormSpec.weighted(gamma))
    assert math.isclose(math.sqrt(grid.mass(frac)), expected, rel_tol=2e-2)


def test_fractional_galilean_routes_agree():
    # Off-origin data keeps |x|^γ smooth on the support and the chirped
    # spectrum away from k = 0, where |k|^γ has its cusp.
    grid = make_grid(1, 2048, 128.0)
    t, gamma = 2.0, 0.5
    u0 = np.exp(-(grid.x - 8) ** 2).astype(complex)
    u = grid.free_propagate(u0, t)
    direct = grid.fractional_galilean(u, t, gamma)
    conjugated = grid.free_propagate(np.abs(grid.x) ** gamma * grid.free_propagate(u, -t), t)
    assert math.sqrt(grid.mass(direct - conjugated) / grid.mass(conjugated)) < 1e-6


def test_fractional_galilean_small_time():
    grid = make_grid(1, 64, 16.0)
    u = gaussian(grid)
    np.testing.assert_allclose(grid.fractional_galilean(u, 0.0, 0.5), np.abs(grid.x) ** 0.5 * u)
    with pytest.raises(ValueError):
        grid.fractional_galilean(u, 1.0, 1.5)


def test_norms():
    grid = make_grid(1, 512, 64.0)
    u = gaussian(grid)
    l2 = math.sqrt(grid.mass(u))
    assert math.isclose(grid.norm(u, spectral.L2), l2, rel_tol=1e-12)
    assert math.isclose(grid.norm(u, NormSpec.sobolev(0)), l2, rel_tol=1e-12)
    assert math.isclose(grid.norm(u, NormSpec.weighted(0)), l2, rel_tol=1e-12)
    assert grid.norm(u, NormSpec.lr(math.inf)) == 1.0
    # ∫e^{-4x²} = sqrt(pi)/2
    assert math.isclose(grid.norm(u, NormSpec.lr(4)), (math.sqrt(math.pi) / 2) ** 0.25, rel_tol=1e-10)
    h1 = grid.norm(u, NormSpec.sobolev(1))
    assert math.isclose(h1 ** 2, grid.mass(u) + 2 * grid.kinetic(u), rel_tol=1e-10)
    sigma = grid.norm(u, NormSpec.sigma())
    xu = grid.norm(u, NormSpec.weighted(1))
    assert math.isclose(sigma ** 2, h1 ** 2 + xu ** 2, rel_tol=1e-12)


def test_norm_spec_validation():
    with pytest.raises(ValueError):
        NormSpec('Lp', 2)
    with pytest.raises(ValueError):
        NormSpec.lr(0.5)
    with pytest.raises(ValueError):
        NormSpec.sobolev(-1)


def test_boundary_mass_fraction():
    grid = make_grid(1, 64, 64.0)
    assert grid.boundary_mass_fraction(gaussian(grid)) < 1e-100
    assert grid.boundary_ok(gaussian(grid))
    flat = np.ones(64, dtype=complex)
    assert abs(grid.boundary_mass_fraction(flat) - 0.2) < 0.02
    assert not grid.boundary_ok(flat)
    assert grid.boundary_mass_fraction(grid.zeros()) == 0.0
