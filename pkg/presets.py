"""One pipeline per preset: build data, evolve, record, check, write.

run(config) returns (exit_code, manifest). Exit codes: 0 every hard-fail
check passed, 1 a hard-fail check failed, 2 configuration error,
3 runtime error.
"""

from dataclasses import dataclass
import json
import logging
import math

import numpy as np

from config import (
    CUSTOM_FILE, ConfigError, GAUSSIAN, PLANE_WAVE, PRESET_CHECKS,
)
from diagnostics import (
    LQ_IN_SIGMA_AND_T, SUP_OVER_SIGMA, T_PLUS_1, TWO_T_PLUS_1, compare_pce_variants,
    conservation_drift, decay_fit, nonscattering_probe, pce_identity_check, record,
    reversed_initial_data, scattering_norms, scattering_profile, spacetime_norm,
    time_reversal_check,
)
from dynamics import (
    BLOWUP, COMPLETED, DEFOCUSING, INVALID_BOUNDARY, STEP_BUDGET, EvolutionError,
    NonlinearityOverflow, evolve,
)
from exponents import (
    P0, TABLE_COLUMNS, admissible, default_critical_pair, emitted_pairs,
    exponent_report, identity_residuals, one_d_pair, table_row,
)
from ground_state import (
    GroundStateResult, OptimizerConfig, chl_classify, optimize, sgn_gradient,
    sgn_quotient,
)
from spectral import CorruptFieldError
from storage import RunOutput, read_field


logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3


def known_checks(preset):
    primary, secondary = PRESET_CHECKS[preset]
    return primary + secondary


@dataclass
class Check:
    name: str
    passed: bool
    value: object
    threshold: object

    def to_dict(self):
        return {'passed': bool(self.passed), 'value': self.value, 'threshold': self.threshold}


class PresetRun:
    """Shared state of one preset execution."""

    def __init__(self, config, output):
        self.config = config
        self.output = output
        self.options = config.options
        self.stage = 'setup'
        self.checks = {}
        self.details = {}
        self._grid = None

    @property
    def grid(self):
        if self._grid is None:
            self._grid = self.config.make_grid()
        return self._grid

    @property
    def params(self):
        return self.config.params()

    def check(self, name, passed, value, threshold):
        known = known_checks(self.config.preset)
        if name not in known:
            raise ValueError(f'Unknown check {name} for {self.config.preset}')
        self.checks[name] = Check(name, bool(passed), value, threshold)
        level = logging.INFO if passed else logging.WARNING
        logger.log(level, f'{name}: {"pass" if passed else "FAIL"} ({value} vs {threshold})')

    def initial_data(self):
        self.stage = 'initial_data'
        return make_initial_data(self.config, self.grid)

    def simulate(self, u0, t_final=None, name='forward'):
        self.stage = f'evolve:{name}'
        t_final = self.config.t_final if t_final is None else t_final
        times = self.config.schedule.checkpoint_times(t_final)
        traj = evolve(self.grid, u0, self.params, self.config.stepper, t_final, times)
        if traj.is_blowup:
            raise EvolutionError('Unexpected blowup', traj.failure_time, traj)
        if traj.status == STEP_BUDGET:
            raise EvolutionError('Step budget exhausted', traj.failure_time, traj)
        return traj

    def save_trajectory(self, traj, suffix=''):
        self.stage = 'write'
        self.output.field(f'final{suffix}.bin', self.grid, traj.times[-1], traj.fields[-1])
        if self.config.save_fields:
            for k, (t, u) in enumerate(zip(traj.times, traj.fields)):
                self.output.field(f'field{suffix}_{k:05d}.bin', self.grid, t, u)

    def standard(self, u0=None):
        """Evolve the configured data, record it and write the series."""
        u0 = self.initial_data() if u0 is None else u0
        traj = self.simulate(u0)
        self.stage = 'record'
        series = record(traj, boundary_threshold=self.config.stepper.boundary_threshold)
        self.output.series('series.csv', series)
        self.save_trajectory(traj)
        self.check_boundary(traj)
        return traj, series

    def check_boundary(self, traj):
        if 'boundary_mass' in known_checks(self.config.preset):
            self.check(
                'boundary_mass',
                traj.status != INVALID_BOUNDARY,
                traj.failure_time,
                self.config.stepper.boundary_threshold,
            )


def make_initial_data(config, grid):
    spec = config.initial_data
    d = grid.dimension

    def per_axis(values):
        return list(values) * d if len(values) == 1 else list(values)

    if spec.kind == GAUSSIAN:
        r2 = sum((x - c) ** 2 for x, c in zip(grid.coords, per_axis(spec.center)))
        phase = sum(v * x for x, v in zip(grid.coords, per_axis(spec.velocity)))
        u = spec.amplitude * np.exp(-r2 / spec.width ** 2) * np.exp(1j * phase)
    elif spec.kind == PLANE_WAVE:
        phase = sum(
            2 * np.pi * m * x / grid.box_length
            for x, m in zip(grid.coords, per_axis(spec.mode))
        )
        u = spec.amplitude * np.exp(1j * phase)
    elif spec.kind == CUSTOM_FILE:
        file_grid, _, u = read_field(spec.path)
        if file_grid != grid:
            raise ConfigError([f'{spec.path} holds a {file_grid!r}, config asks for {grid!r}'])
    else:
        raise ConfigError([f'Unknown initial data kind {spec.kind}'])

    u = grid.check_field(u)
    if spec.normalize_to > 0:
        norm_spec = scattering_norms(d, config.model.power)[spec.normalize_norm]
        if norm_spec is None:
            raise ConfigError([f'{spec.normalize_norm} is undefined for p={config.model.power}'])
        current = grid.norm(u, norm_spec)
        if current == 0:
            raise ConfigError(['Cannot normalize zero initial data'])
        u = u * (spec.normalize_to / current)
    return u


def relative_spread(values):
    values = np.asarray(values, dtype=float)
    ref = abs(values[0])
    spread = float(np.max(np.abs(values - values[0])))
    return spread / ref if ref > 0 else spread


# Presets


def free_sanity(run):
    traj, series = run.standard()
    tol = run.options['tolerance']
    run.stage = 'checks'
    run.check('mass_constant', relative_spread(series.mass) < tol, relative_spread(series.mass), tol)
    run.check('kinetic_constant', relative_spread(series.kinetic) < tol, relative_spread(series.kinetic), tol)
    run.check('Ju_constant', relative_spread(series.Ju_norm) < tol, relative_spread(series.Ju_norm), tol)


def conservation(run):
    traj, series = run.standard()
    run.stage = 'checks'
    drift = conservation_drift(series)
    run.details['drift'] = drift
    run.check('mass_drift', drift['mass'] < run.options['mass_tolerance'], drift['mass'], run.options['mass_tolerance'])
    run.check('energy_drift', drift['energy'] < run.options['energy_tolerance'], drift['energy'], run.options['energy_tolerance'])


def _scattering(run, primary_norm):
    traj, series = run.standard()
    run.stage = 'checks'
    report = scattering_profile(traj)
    names = list(report.differences)
    run.output.csv(
        'cauchy.csv',
        ['time'] + names,
        ([t] + [report.differences[n][k] for n in names] for k, t in enumerate(report.times[1:])),
    )
    run.output.field('scattering_state.bin', run.grid, traj.times[-1], report.scattering_state)
    run.details['scattering'] = report.to_dict()

    transient = run.options['transient']
    for name in names:
        check = f'cauchy_{name}_monotone'
        if check in known_checks(run.config.preset):
            run.check(check, report.monotone_after(name, transient), report.final(name), f'nonincreasing after t={transient}')

    data_norm = run.grid.norm(traj.fields[0], scattering_norms(run.params.dimension, run.params.power)[primary_norm])
    if data_norm == 0:
        raise ValueError('The final-difference ratio is undefined for zero initial data')
    ratio = report.final(primary_norm) / data_norm
    run.check('final_difference', ratio < run.options['final_ratio'], ratio, run.options['final_ratio'])
    return traj, series, report


def small_data_scatter_intercritical(run):
    _scattering(run, 'L2')


def small_data_scatter_subcritical(run):
    _scattering(run, 'FH_gamma')


def large_data_scatter(run):
    traj, series = run.standard()
    run.stage = 'checks'
    report = scattering_profile(traj)
    run.details['scattering'] = report.to_dict()
    transient = run.options['transient']
    run.check('cauchy_L2_monotone', report.monotone_after('L2', transient), report.final('L2'), f'nonincreasing after t={transient}')

    d, p = run.params.dimension, run.params.power
    if d == 1:
        q, r = one_d_pair(p)
        mode = SUP_OVER_SIGMA
    else:
        pair = default_critical_pair(d, p)
        if pair is None:
            raise ValueError(f'No critical space-time pair for d={d}, p={p}')
        q, r = pair.q_c, pair.r_c
        mode = LQ_IN_SIGMA_AND_T
    T = run.config.t_final
    total = spacetime_norm(traj, run.params, q, r, mode)
    tail = spacetime_norm(traj, run.params, q, r, mode, window=(T / 2, T))
    fraction = (tail / total) ** q if total > 0 else 0.0
    run.details['spacetime'] = {'q': q, 'r': r, 'mode': mode, 'total': total, 'tail': tail}
    run.check('spacetime_tail', fraction < run.options['tail_fraction'], fraction, run.options['tail_fraction'])

    drift = conservation_drift(series)
    run.check('conservation', drift['mass'] < 1e-8 and drift['energy'] < 1e-6, drift, {'mass': 1e-8, 'energy': 1e-6})


def pce_check(run):
    traj, series = run.standard()
    run.stage = 'checks'
    window = tuple(run.options['window'])
    reports, best = compare_pce_variants(series, window)
    worse = next(v for v in reports if v != best)
    run.details['pce'] = {v: r.to_dict() for v, r in reports.items()}
    run.details['pce']['selected_variant'] = best

    rows = zip(
        reports[best].times,
        reports[best].lhs,
        reports[T_PLUS_1].rhs,
        reports[TWO_T_PLUS_1].rhs,
        reports[T_PLUS_1].residual,
        reports[TWO_T_PLUS_1].residual,
    )
    run.output.csv(
        'pce_residuals.csv',
        ['time', 'lhs', 'rhs_t_plus_1', 'rhs_two_t_plus_1', 'residual_t_plus_1', 'residual_two_t_plus_1'],
        rows,
    )

    tol = run.options['residual_tolerance']
    best_res, worse_res = reports[best].aggregate, reports[worse].aggregate
    run.check('best_variant_residual', best_res < tol, best_res, tol)
    separation = run.options['separation']
    run.check('variant_separation', worse_res >= separation * best_res, worse_res / best_res if best_res else math.inf, separation)

    coarse = pce_identity_check(series.every(2), window, best)
    ratio = coarse.aggregate / best_res if best_res else math.inf
    lo, hi = run.options['refinement_range']
    run.details['pce']['refinement_ratio'] = ratio
    run.check('refinement_order', lo <= ratio <= hi, ratio, [lo, hi])

    d, p = run.params.dimension, run.params.power
    if run.params.sign == DEFOCUSING and p > 8 / d:
        r = reports[best]
        good = bool(np.all(r.potential_term <= 0) and np.all(r.sigma_term <= 0))
        run.check('good_sign', good, good, 'both weighted terms <= 0')
    else:
        run.check('good_sign', True, 'not applicable', 'defocusing, p > 8/d')


def decay_rates(run):
    traj, series = run.standard()
    run.stage = 'checks'
    window = tuple(run.options['window'])
    slack = run.options['slack']
    report = exponent_report(run.params.dimension, run.params.power)
    ju = decay_fit(series, 'Ju_norm', window)
    w = decay_fit(series, 'w_norm_p2', window)
    run.details['fits'] = {'Ju_norm': ju.to_dict(), 'w_norm_p2': w.to_dict()}
    run.check('Ju_decay_bound', ju.exponent <= report.decay_c1 + slack, ju.exponent, report.decay_c1 + slack)
    run.check('w_decay_bound', w.exponent <= report.decay_rate_w + slack, w.exponent, report.decay_rate_w + slack)
    drift = conservation_drift(series)
    run.check('conservation', drift['mass'] < 1e-8 and drift['energy'] < 1e-6, drift, {'mass': 1e-8, 'energy': 1e-6})


def nonscattering(run):
    u0 = run.initial_data()
    traj, series = run.standard(u0)
    run.stage = 'checks'
    window = tuple(run.options['window'])
    report = nonscattering_probe(traj, u0, window)
    run.output.csv('overlap.csv', ['time', 'overlap'], zip(report.times, report.overlap))
    run.output.csv('overlap_derivative.csv', ['time', 'derivative'], zip(report.derivative_times, report.derivative))
    run.details['nonscattering'] = report.to_dict()
    lo, hi = run.options['exponent_range']
    exponent = report.fit.exponent if report.fit else None
    run.check('derivative_exponent', exponent is not None and lo <= exponent <= hi, exponent, [lo, hi])
    run.check('overlap_increasing', report.increasing, report.increasing, True)


def time_reversal(run):
    u0 = run.initial_data()
    T = run.config.t_final
    backward = run.simulate(u0, -T, name='backward')
    forward = run.simulate(reversed_initial_data(run.grid, u0), T, name='forward')
    run.stage = 'record'
    run.output.series('series_backward.csv', record(backward))
    run.output.series('series_forward.csv', record(forward))
    run.save_trajectory(backward, '_backward')
    run.save_trajectory(forward, '_forward')
    run.stage = 'checks'
    report = time_reversal_check(forward, backward)
    run.details['time_reversal'] = report.to_dict()
    ft, et = run.options['field_tolerance'], run.options['energy_tolerance']
    run.check('field_deviation', report.field_deviation < ft, report.field_deviation, ft)
    run.check('energy_deviation', report.energy_deviation < et, report.energy_deviation, et)


def _attempt(run, u0, t_final):
    """Evolve; blowup (including overflow) is a result here, not an error."""
    times = run.config.schedule.checkpoint_times(t_final)
    try:
        traj = evolve(run.grid, u0, run.params, run.config.stepper, t_final, times)
    except EvolutionError as e:
        logger.info(f'Overflow treated as blowup: {e}')
        traj = e.trajectory
    return traj


def reached_end(traj):
    return traj.status in (COMPLETED, INVALID_BOUNDARY)


def blowup_dichotomy(run):
    base = run.initial_data()
    opts = run.options
    T = run.config.t_final
    summary = {}

    run.stage = 'evolve:small'
    small = _attempt(run, opts['lambda_small'] * base, T)
    small_series = record(small)
    growth = float(np.sqrt(np.max(small_series.kinetic) / small_series.kinetic[0]))
    run.output.series('series_small.csv', small_series)
    summary['small'] = {'lambda': opts['lambda_small'], 'status': small.status, 'gradient_growth': growth}
    run.check(
        'small_global',
        reached_end(small) and small.times[-1] == T and growth < opts['small_gradient_factor'],
        growth,
        opts['small_gradient_factor'],
    )

    large = {}
    for direction, sign in (('forward', 1), ('backward', -1)):
        run.stage = f'evolve:large_{direction}'
        traj = _attempt(run, opts['lambda_large'] * base, sign * opts['large_t_final'])
        large[direction] = traj
        summary[f'large_{direction}'] = {
            'lambda': opts['lambda_large'],
            'status': traj.status,
            'failure_time': traj.failure_time,
            'steps': traj.steps + traj.rejected_steps,
        }
        run.check(f'large_blowup_{direction}', traj.is_blowup, traj.status, BLOWUP)

    run.stage = 'bisection'
    lo, hi = opts['lambda_small'], opts['lambda_large']
    trials = []
    while hi / lo > opts['bracket_factor']:
        mid = math.sqrt(lo * hi)
        traj = _attempt(run, mid * base, opts['bisection_t_final'])
        trials.append({'lambda': mid, 'status': traj.status, 'failure_time': traj.failure_time})
        # Step-budget exhaustion counts as blowup.
        if reached_end(traj):
            lo = mid
        else:
            hi = mid
        logger.info(f'Bracket [{lo:.6g}, {hi:.6g}]')
    summary['bisection'] = trials
    summary['bracket'] = [lo, hi]
    consistent = reached_end(small) and large['forward'].is_blowup
    run.check('bracket', consistent and hi / lo <= opts['bracket_factor'], [lo, hi], opts['bracket_factor'])

    if opts['ground_state_json']:
        run.stage = 'classify'
        with open(opts['ground_state_json']) as f:
            gs = GroundStateResult.from_dict(json.load(f))
        summary['classification'] = {
            str(lam): chl_classify(run.grid, lam * base, run.params, gs)
            for lam in [opts['lambda_small'], lo, hi, opts['lambda_large']]
        }
    run.details['blowup'] = summary


def random_directions(grid, grad, count, rng):
    """Smooth random directions tilted toward the gradient."""
    envelope = np.exp(-(grid.x / 4) ** 2)
    grad_unit = grad / math.sqrt(grid.mass(grad))
    out = []
    for _ in range(count):
        coeffs = rng.normal(size=(8, 2))
        eta = sum(
            (a + 1j * b) * np.cos(k * grid.x / 2)
            for k, (a, b) in enumerate(coeffs)
        ) * envelope
        eta = eta + 0.5 * math.sqrt(grid.mass(eta)) * grad_unit
        out.append(eta)
    return out


def gradient_errors(grid, phi, p, cfg, count, eps, rng):
    """Relative gap between Re⟨grad log J, η⟩ and a centered difference of log J."""
    grad = sgn_gradient(grid, phi, p, cfg.S, cfg.nodes_per_unit)

    def log_j(f):
        return math.log(sgn_quotient(grid, f, p, cfg.S, cfg.nodes_per_unit))

    errors = []
    for eta in random_directions(grid, grad, count, rng):
        analytic = grid.inner(grad, eta).real
        numeric = (log_j(phi + eps * eta) - log_j(phi - eps * eta)) / (2 * eps)
        errors.append(abs(numeric - analytic) / abs(analytic))
    return errors


def relative_change(a, b):
    return abs(a - b) / abs(b)


def ground_state(run):
    opts = run.options
    grid = run.grid
    p = run.params.power
    cfg = OptimizerConfig(S=opts['S'], nodes_per_unit=opts['nodes_per_unit'], max_iter=opts['max_iter'])
    spec = run.config.initial_data
    gaussian = (spec.amplitude * np.exp(-(grid.x / spec.width) ** 2)).astype(complex)
    sech = (spec.amplitude / np.cosh(grid.x / spec.width)).astype(complex)

    run.stage = 'gradient_check'
    rng = np.random.default_rng(run.config.rng_seed)
    errors = gradient_errors(grid, gaussian, p, cfg, opts['directions'], opts['fd_epsilon'], rng)
    run.check('gradient_check', max(errors) < opts['gradient_tolerance'], max(errors), opts['gradient_tolerance'])

    run.stage = 'optimize:gaussian'
    result = optimize(grid, gaussian, p, cfg)
    run.stage = 'optimize:sech'
    other = optimize(grid, sech, p, cfg)

    run.stage = 'write'
    run.output.json('ground_state.json', result.to_dict())
    run.output.json('ground_state_sech.json', other.to_dict())
    run.output.csv('Q.csv', ['x', 're', 'im'], zip(grid.x, result.Q.real, result.Q.imag))
    run.output.csv('history.csv', ['iteration', 'quotient'], enumerate(result.history))
    run.output.field('Q.bin', grid, 0.0, result.Q)

    run.stage = 'checks'
    steps = np.diff(result.history)
    run.check('monotone', bool(np.all(steps >= 0)), float(steps.min()) if len(steps) else 0.0, 0.0)
    run.check('el_residual', result.el_residual < opts['el_tolerance'], result.el_residual, opts['el_tolerance'])
    gap = relative_change(other.quotient_value, result.quotient_value)
    if gap >= opts['basin_tolerance']:
        logger.warning(f'Gaussian and sech initializations reach different quotients (gap {gap:.3e})')
    run.check('basin_agreement', gap < opts['basin_tolerance'], gap, opts['basin_tolerance'])

    run.stage = 'self_convergence'
    J = result.quotient_value
    wide = sgn_quotient(grid, result.Q, p, 2 * cfg.S, cfg.nodes_per_unit)
    cut = relative_change(J, wide)
    run.check('truncation_convergence', cut < opts['truncation_tolerance'], cut, opts['truncation_tolerance'])
    fine = sgn_quotient(grid, result.Q, p, cfg.S, 2 * cfg.nodes_per_unit)
    nodes = relative_change(J, fine)
    run.check('node_convergence', nodes < opts['node_tolerance'], nodes, opts['node_tolerance'])

    restart = optimize(grid, result.Q, p, cfg)
    change = relative_change(restart.quotient_value, J)
    run.check(
        'restart_fixed_point',
        restart.iterations <= 2 and change < opts['restart_tolerance'],
        {'iterations': restart.iterations, 'change': change},
        {'iterations': 2, 'change': opts['restart_tolerance']},
    )
    if result.threshold_value is not None:
        rescaled = optimize(grid, opts['rescale'] * result.Q, p, cfg)
        shift = relative_change(rescaled.threshold_value, result.threshold_value)
        run.check('threshold_rescaling', shift < opts['threshold_tolerance'], shift, opts['threshold_tolerance'])
    else:
        run.check('threshold_rescaling', True, 'not applicable', 'p > 8')

    run.details['ground_state'] = {
        'gaussian': result.to_dict(),
        'sech': other.to_dict(),
        'gradient_errors': errors,
        'quotient_2S': wide,
        'quotient_2_nodes': fine,
        'restart': restart.to_dict(),
    }


GOLDEN = [
    ('s_c(1,4)', lambda: exponent_report(1, 4).s_c, 0.0),
    ('s_c(3,4)', lambda: exponent_report(3, 4).s_c, 1.0),
    ('gamma(1,3)', lambda: exponent_report(1, 3).gamma, 1 / 6),
    ('p0', lambda: P0, 3 + math.sqrt(5)),
    ('Q(1,10)', lambda: exponent_report(1, 10).Q_threshold, 10 / 3),
    ('c1(1,6)', lambda: exponent_report(1, 6).decay_c1, 0.5),
    ('w_rate(1,6)', lambda: exponent_report(1, 6).decay_rate_w, -0.125),
]


def exponents_table(run):
    run.stage = 'table'
    reports = [
        exponent_report(d, p)
        for d in run.options['dimensions']
        for p in run.options['powers']
    ]
    rows = [table_row(r) for r in reports]
    run.output.csv('exponents.csv', TABLE_COLUMNS, ([row[c] for c in TABLE_COLUMNS] for row in rows))

    run.stage = 'checks'
    pairs = [(r.d, pair) for r in reports for pair in emitted_pairs(r)]
    bad = [(d, q, r) for d, (q, r) in pairs if not admissible(q, r, d)]
    run.check('admissibility', not bad, len(bad), 0)
    worst = max(abs(v) for r in reports for v in identity_residuals(r).values())
    run.check('identities', worst <= 1e-12, worst, 1e-12)
    misses = {name: f() for name, f, want in GOLDEN if not abs(f() - want) <= 1e-12}
    run.check('golden_values', not misses, misses, 'exact to 1e-12')


RUNNERS = {
    'free_sanity': free_sanity,
    'conservation': conservation,
    'small_data_scatter_intercritical': small_data_scatter_intercritical,
    'small_data_scatter_subcritical': small_data_scatter_subcritical,
    'large_data_scatter': large_data_scatter,
    'pce_check': pce_check,
    'decay_rates': decay_rates,
    'nonscattering': nonscattering,
    'time_reversal': time_reversal,
    'blowup_dichotomy': blowup_dichotomy,
    'ground_state': ground_state,
    'exponents_table': exponents_table,
}


def run(config):
    output = RunOutput(config.output_dir, config.sha256(), config.to_dict())
    ctx = PresetRun(config, output)
    logger.info(f'Running {config.preset} into {config.output_dir}')
    try:
        RUNNERS[config.preset](ctx)
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_CONFIG_ERROR, output.finalize('config_error', ctx.stage, str(e))
    except (EvolutionError, NonlinearityOverflow, CorruptFieldError, FloatingPointError,
            ValueError, OSError) as e:
        logger.error(f'{ctx.stage}: {e}')
        return EXIT_RUNTIME_ERROR, output.finalize('runtime_error', ctx.stage, str(e))
    except Exception as e:
        logger.exception(f'{ctx.stage}: unexpected {type(e).__name__}')
        return EXIT_RUNTIME_ERROR, output.finalize('error', ctx.stage, f'{type(e).__name__}: {e}')

    checks = {name: c.to_dict() for name, c in ctx.checks.items()}
    for name, c in checks.items():
        c['hard_fail'] = name in config.hard_fail
    output.json('checks.json', {'preset': config.preset, 'checks': checks, 'details': ctx.details})

    failed = [name for name in config.hard_fail if name in ctx.checks and not ctx.checks[name].passed]
    missing = [name for name in config.hard_fail if name not in ctx.checks]
    if missing:
        logger.warning(f'Hard-fail checks never ran: {missing}')
    if failed or missing:
        logger.warning(f'Failed checks: {failed + missing}')
        return EXIT_CHECK_FAILED, output.finalize('check_failed', 'checks', checks=checks)
    return EXIT_PASS, output.finalize('passed', checks=checks)
