import math

import numpy as np
import pytest

import diagnostics
from diagnostics import (
    DiagnosticsTimeSeries, LQ_IN_SIGMA_AND_T, SUP_OVER_SIGMA, TWO_T_PLUS_1, T_PLUS_1,
)
from dynamics import DEFOCUSING, FOCUSING, ModelParams, StepperConfig, evolve
from spectral import NormSpec, make_grid


def linear_run(grid, u0, power=6.0, times=(0.0, 1.0, 2.0, 3.0, 4.0, 5.0)):
    params = ModelParams.with_nodes(grid.dimension, power, DEFOCUSING, 8, coupling=0.0)
    return evolve(grid, u0, params, StepperConfig(dt=0.1), times[-1], list(times))


def synthetic_series(time, **columns):
    cols = {name: np.ones(len(time)) for name in DiagnosticsTimeSeries.columns()}
    cols['time'] = np.asarray(time, dtype=float)
    cols.update(columns)
    return DiagnosticsTimeSeries(**cols)


@pytest.fixture(scope='module')
def pce_series():
    grid = make_grid(1, 512, 128.0)
    params = ModelParams.with_nodes(1, 6.0, DEFOCUSING, 16)
    u0 = np.exp(-(grid.x / 2) ** 2).astype(complex)
    times = list(np.arange(163) * 0.025)
    traj = evolve(grid, u0, params, StepperConfig(dt=2e-3), times[-1], times)
    return diagnostics.record(traj)


def test_columns():
    assert DiagnosticsTimeSeries.columns()[0] == 'time'
    assert 'flagged' not in DiagnosticsTimeSeries.columns()
    assert len(DiagnosticsTimeSeries.columns()) == 13
    series = synthetic_series(np.arange(10.0))
    with pytest.raises(ValueError):
        series.column('dimension')
    thinned = series.every(3)
    assert list(thinned.time) == [0, 3, 6, 9]
    assert len(list(thinned.rows())) == 4


def test_sigma_potentials_of_plane_wave():
    grid = make_grid(1, 64, 2 * np.pi)
    params = ModelParams.with_nodes(1, 2.0, n_nodes=4)
    u = 0.5 * np.exp(3j * grid.x)
    expected = 0.5 ** 4 * 2 * np.pi
    np.testing.assert_allclose(diagnostics.sigma_potentials(grid, u, params), expected, rtol=1e-12)


def test_record_of_free_gaussian():
    grid = make_grid(1, 1024, 256.0)
    u0 = np.exp(-grid.x ** 2).astype(complex)
    series = diagnostics.record(linear_run(grid, u0))
    assert len(series) == 6
    np.testing.assert_allclose(series.mass, grid.mass(u0), rtol=1e-12)
    np.testing.assert_allclose(series.kinetic, grid.kinetic(u0), rtol=1e-12)
    # ‖J(t)u‖ = ‖x u0‖ for the free flow
    np.testing.assert_allclose(series.Ju_norm, grid.norm(u0, NormSpec.weighted(1)), rtol=1e-12)
    np.testing.assert_allclose(series.energy_defocusing - series.kinetic, series.nl_potential / 8)
    np.testing.assert_allclose(series.energy_focusing_CHL, series.kinetic - series.nl_potential)
    np.testing.assert_allclose(series.energy_hamiltonian, series.kinetic)
    np.testing.assert_allclose(series.pce, series.Ju_norm ** 2 + series.time ** 2 * series.nl_potential)
    np.testing.assert_allclose(series.w_norm_p2, series.nl_potential ** (1 / 8))
    assert np.all(np.diff(series.nl_potential) < 0)
    assert series.flagged == []
    drift = diagnostics.conservation_drift(series)
    assert drift['mass'] < 1e-12
    assert drift['energy'] < 1e-12


def test_ju_column_matches_galilean_operator():
    grid = make_grid(1, 1024, 256.0)
    u0 = np.exp(-grid.x ** 2) * np.exp(0.5j * grid.x)
    traj = linear_run(grid, u0)
    series = diagnostics.record(traj)
    for t, u, ju in zip(traj.times, traj.fields, series.Ju_norm):
        [j] = grid.galilean_apply(u, t)
        assert math.isclose(math.sqrt(grid.mass(j)), ju, rel_tol=1e-8)


def test_boundary_flagging():
    grid = make_grid(1, 64, 16.0)
    u0 = np.exp(1j * 2 * np.pi * grid.x / 16.0)
    series = diagnostics.record(linear_run(grid, u0, times=(0.0, 1.0)))
    assert series.flagged == [0, 1]
    assert np.all(series.boundary_mass_fraction > 0.1)


def test_pce_identity_selects_two_t_plus_one(pce_series):
    reports, best = diagnostics.compare_pce_variants(pce_series, (1.0, 4.0))
    assert best == TWO_T_PLUS_1
    assert reports[best].aggregate < 1e-3
    assert reports[T_PLUS_1].aggregate >= 10 * reports[best].aggregate
    assert reports[best].to_dict()['variant'] == TWO_T_PLUS_1


def test_pce_residual_is_second_order_in_spacing(pce_series):
    fine = diagnostics.pce_identity_check(pce_series, (1.0, 4.0))
    coarse = diagnostics.pce_identity_check(pce_series.every(2), (1.0, 4.0))
    assert 3 <= coarse.aggregate / fine.aggregate <= 5


def test_pce_check_validation(pce_series):
    with pytest.raises(ValueError):
        diagnostics.pce_identity_check(pce_series, (-1.0, 1.0))
    with pytest.raises(ValueError):
        diagnostics.pce_identity_check(pce_series, (2.0, 1.0))
    with pytest.raises(ValueError):
        diagnostics.pce_identity_check(pce_series, (1.0, 2.0), 'three_t')


def test_good_sign_terms_for_defocusing_above_eight():
    grid = make_grid(1, 256, 64.0)
    params = ModelParams.with_nodes(1, 10.0, DEFOCUSING, 8)
    u0 = 0.8 * np.exp(-(grid.x / 2) ** 2).astype(complex)
    times = list(np.arange(51) * 0.04)
    traj = evolve(grid, u0, params, StepperConfig(dt=2e-3), times[-1], times)
    report = diagnostics.pce_identity_check(diagnostics.record(traj), (0.5, 1.5))
    assert np.all(report.potential_term < 0)
    assert np.all(report.sigma_term < 0)
    assert report.aggregate < 1e-2


def test_power_fit():
    x = np.linspace(1, 10, 20)
    slope, intercept, r2 = diagnostics.power_fit(x, 3 * x ** -0.5)
    assert slope == pytest.approx(-0.5)
    assert intercept == pytest.approx(math.log(3))
    assert r2 == pytest.approx(1.0)
    with pytest.raises(ValueError):
        diagnostics.power_fit(x[:5], x[:5])
    with pytest.raises(ValueError):
        diagnostics.power_fit(x, x - 5)


def test_decay_fit_uses_japanese_bracket():
    t = np.linspace(0, 50, 101)
    series = synthetic_series(t, Ju_norm=2 * diagnostics.japanese(t) ** 0.25)
    fit = diagnostics.decay_fit(series, 'Ju_norm', (5.0, 50.0))
    assert fit.exponent == pytest.approx(0.25)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.to_dict()['window'] == [5.0, 50.0]
    with pytest.raises(ValueError):
        diagnostics.decay_fit(series, 'mass', (5.0, 50.0))
    with pytest.raises(ValueError):
        diagnostics.decay_fit(series, 'Ju_norm', (0.0, 50.0))


def test_free_potential_decay_rate():
    # Free flow: ∫|e^{isΔ}u0|^8 falls like s^{-3}, so ‖w‖ falls like ⟨t⟩^{-3/8}.
    grid = make_grid(1, 8192, 2048.0)
    u0 = np.exp(-grid.x ** 2).astype(complex)
    times = tuple(float(t) for t in range(51))
    series = diagnostics.record(linear_run(grid, u0, times=times))
    fit = diagnostics.decay_fit(series, 'w_norm_p2', (5.0, 50.0))
    assert -0.4 < fit.exponent < -0.3
    assert fit.r_squared > 0.99


def test_spacetime_norm_of_plane_wave():
    grid = make_grid(1, 64, 2 * np.pi)
    u0 = 0.5 * np.exp(2j * grid.x)
    traj = linear_run(grid, u0, power=2.0, times=(0.0, 1.0, 2.0, 3.0, 4.0))
    params = traj.params
    a = 0.5 * (2 * np.pi) ** (1 / 6)
    for mode in (SUP_OVER_SIGMA, LQ_IN_SIGMA_AND_T):
        assert diagnostics.spacetime_norm(traj, params, 4, 6, mode) == pytest.approx(4 ** 0.25 * a)
        assert diagnostics.spacetime_norm(traj, params, 4, 6, mode, window=(2, 4)) == pytest.approx(2 ** 0.25 * a)
    assert diagnostics.spacetime_norm(traj, params, math.inf, 6, SUP_OVER_SIGMA) == pytest.approx(a)
    with pytest.raises(ValueError):
        diagnostics.spacetime_norm(traj, params, math.inf, 6, LQ_IN_SIGMA_AND_T)
    with pytest.raises(ValueError):
        diagnostics.spacetime_norm(traj, params, 0.5, 6)
    with pytest.raises(ValueError):
        diagnostics.spacetime_norm(traj, params, 4, 6, 'Lq_in_t')


def test_spacetime_norm_grows_with_window():
    grid = make_grid(1, 256, 64.0)
    u0 = np.exp(-grid.x ** 2).astype(complex)
    traj = linear_run(grid, u0)
    params = traj.params
    for mode in (SUP_OVER_SIGMA, LQ_IN_SIGMA_AND_T):
        norms = [diagnostics.spacetime_norm(traj, params, 6, 6, mode, window=(0, T)) for T in (1, 2, 3, 5)]
        assert all(b > a for a, b in zip(norms, norms[1:]))


def test_scattering_norms():
    norms = diagnostics.scattering_norms(1, 5.0)
    assert norms['FH_gamma'] is None
    assert norms['H_s_c'].kind == 'SobolevHs'
    assert norms['H_s_c'].value == pytest.approx(0.1)
    norms = diagnostics.scattering_norms(1, 3.0)
    assert norms['H_s_c'] is None
    assert norms['FH_gamma'].value == pytest.approx(1 / 6)


def test_linear_profile_does_not_move():
    grid = make_grid(1, 256, 64.0)
    u0 = np.exp(-grid.x ** 2).astype(complex)
    traj = linear_run(grid, u0, power=5.0)
    report = diagnostics.scattering_profile(traj)
    assert report.undefined == ['FH_gamma']
    for name in ('L2', 'H_s_c', 'Sigma'):
        assert report.final(name) == 0.0
        assert report.monotone_after(name, 0.0)
    np.testing.assert_array_equal(report.scattering_state, u0)
    with pytest.raises(ValueError):
        diagnostics.scattering_profile(linear_run(grid, u0, times=(0.0, 1.0, 2.0)))


def test_small_data_profile_settles():
    grid = make_grid(1, 1024, 256.0)
    params = ModelParams.with_nodes(1, 5.0, DEFOCUSING, 8)
    u0 = 0.3 * np.exp(-(grid.x / 2) ** 2).astype(complex)
    times = [float(t) for t in range(11)]
    traj = evolve(grid, u0, params, StepperConfig(dt=5e-3), 10.0, times)
    report = diagnostics.scattering_profile(traj)
    assert report.monotone_after('L2', 1.0)
    assert report.final('L2') < 2e-2 * report.differences['L2'][0]


def test_transform_inner_is_plancherel():
    grid = make_grid(1, 256, 32.0)
    u = np.exp(-grid.x ** 2) * np.exp(1j * grid.x)
    uhat = grid.fourier_transform(u)
    assert diagnostics.transform_inner(grid, uhat, uhat).real == pytest.approx(grid.mass(u), rel=1e-12)


def test_nonscattering_on_linear_run():
    grid = make_grid(1, 256, 64.0)
    u0 = np.exp(-grid.x ** 2).astype(complex)
    traj = linear_run(grid, u0, power=1.0, times=tuple(float(t) for t in range(12)))
    report = diagnostics.nonscattering_probe(traj, u0, window=(2.0, 10.0))
    assert report.ill_conditioned
    assert report.fit is None
    assert not report.increasing
    assert report.expected_exponent == -0.5


def test_nonscattering_overlap_grows_like_root_t():
    grid = make_grid(1, 1024, 512.0)
    params = ModelParams.with_nodes(1, 1.0, DEFOCUSING, 8)
    u0 = 0.02 * np.exp(-(grid.x / 2) ** 2).astype(complex)
    times = list(np.arange(41) * 0.5)
    traj = evolve(grid, u0, params, StepperConfig(dt=0.02), times[-1], times)
    report = diagnostics.nonscattering_probe(traj, u0, window=(2.0, 20.0))
    assert report.increasing
    assert not report.ill_conditioned
    assert -0.65 <= report.fit.exponent <= -0.35
    # C0 = ∫|φ̂|^p |φ̂|² > 0 when ψ = φ
    assert report.c0.real > 0
    assert abs(report.c0.imag) < 1e-12 * report.c0.real


def test_time_reversal():
    grid = make_grid(1, 256, 32.0)
    params = ModelParams.with_nodes(1, 10.0, FOCUSING, 8)
    u0 = 0.8 * np.exp(-grid.x ** 2).astype(complex)
    times = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
    cfg = StepperConfig(dt=1e-3)
    backward = evolve(grid, u0, params, cfg, -0.5, [-t for t in times])
    forward = evolve(grid, diagnostics.reversed_initial_data(grid, u0), params, cfg, 0.5, times)
    report = diagnostics.time_reversal_check(forward, backward)
    assert report.field_deviation < 1e-8
    assert report.energy_deviation < 1e-8
    with pytest.raises(ValueError):
        diagnostics.time_reversal_check(forward, forward)


def test_time_reversal_defocusing():
    grid = make_grid(1, 256, 32.0)
    params = ModelParams.with_nodes(1, 4.0, DEFOCUSING, 8)
    u0 = np.exp(-grid.x ** 2) * (1 + 0.5j * grid.x)
    times = [0.0, 0.25, 0.5]
    cfg = StepperConfig(dt=1e-3)
    backward = evolve(grid, u0, params, cfg, -0.5, [-t for t in times])
    forward = evolve(grid, diagnostics.reversed_initial_data(grid, u0), params, cfg, 0.5, times)
    report = diagnostics.time_reversal_check(forward, backward)
    assert report.field_deviation < 1e-8
    assert report.energy_deviation < 1e-8


def test_asymptotic_profile_of_free_gaussian():
    grid = make_grid(1, 4096, 1024.0)
    phi = np.exp(-grid.x ** 2).astype(complex)
    u = grid.free_propagate(phi, 20.0)
    assert diagnostics.asymptotic_profile_error(grid, u, 20.0, phi) < 1e-3
    with pytest.raises(ValueError):
        diagnostics.asymptotic_profile_error(grid, u, 0.0, phi)


def test_asymptotic_profile_in_two_dimensions():
    grid = make_grid(2, 512, 256.0)
    phi = np.exp(-grid.r2).astype(complex)
    u = grid.free_propagate(phi, 10.0)
    assert diagnostics.asymptotic_profile_error(grid, u, 10.0, phi) < 1e-2


def test_asymptotic_profile_error_normalization():
    grid = make_grid(1, 1024, 256.0)
    phi = np.exp(-grid.x ** 2).astype(complex)
    u = grid.free_propagate(phi, 5.0)
    assert diagnostics.asymptotic_profile_error(grid, u, 5.0, grid.zeros()) == pytest.approx(1.0)
    error = diagnostics.asymptotic_profile_error(grid, u, 5.0, phi)
    assert diagnostics.asymptotic_profile_error(grid, 3 * u, 5.0, 3 * phi) == pytest.approx(error, rel=1e-12)
