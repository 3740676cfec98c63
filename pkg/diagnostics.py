"""Quantities monitored along a trajectory, and the checks built on them.

Energies come in three conventions, each in its own column:
  energy_defocusing    kinetic + nl_potential/(p+2)
  energy_focusing_CHL  kinetic - nl_potential  (E over σ in [0, 1], no 1/(p+2))
  energy_hamiltonian   kinetic + sign·g·nl_potential/(p+2), conserved by the model
"""

from dataclasses import dataclass, field, fields as dataclass_fields
import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from exponents import exponent_report
from spectral import BOUNDARY_MASS_THRESHOLD, L2, NormSpec


logger = logging.getLogger(__name__)

T_PLUS_1 = 't_plus_1'
TWO_T_PLUS_1 = 'two_t_plus_1'
PCE_VARIANTS = (T_PLUS_1, TWO_T_PLUS_1)

SUP_OVER_SIGMA = 'sup_over_sigma'
LQ_IN_SIGMA_AND_T = 'Lq_in_sigma_and_t'

MAX_PCE_SPACING = 0.05


def japanese(t):
    return np.sqrt(1 + np.asarray(t, dtype=float) ** 2)


@dataclass
class DiagnosticsTimeSeries:
    time: np.ndarray
    mass: np.ndarray
    kinetic: np.ndarray
    nl_potential: np.ndarray
    energy_defocusing: np.ndarray
    energy_focusing_CHL: np.ndarray
    energy_hamiltonian: np.ndarray
    Ju_norm: np.ndarray
    pce: np.ndarray
    w_norm_p2: np.ndarray
    w1_norm_p2: np.ndarray
    sigma_weighted_potential: np.ndarray
    boundary_mass_fraction: np.ndarray
    # Not columns.
    dimension: int = field(default=1, metadata={'column': False})
    power: float = field(default=1.0, metadata={'column': False})
    signed_coupling: float = field(default=1.0, metadata={'column': False})
    flagged: List[int] = field(default_factory=list, metadata={'column': False})

    @staticmethod
    def columns():
        return [f.name for f in dataclass_fields(DiagnosticsTimeSeries)
                if f.metadata.get('column', True)]

    def __len__(self):
        return len(self.time)

    def column(self, name):
        if name not in self.columns():
            raise ValueError(f'Unknown series column {name}')
        return getattr(self, name)

    def every(self, step):
        """The series restricted to every `step`-th checkpoint."""
        cols = {c: getattr(self, c)[::step] for c in self.columns()}
        return DiagnosticsTimeSeries(
            **cols,
            dimension=self.dimension,
            power=self.power,
            signed_coupling=self.signed_coupling,
            flagged=[k // step for k in self.flagged if k % step == 0],
        )

    def rows(self):
        cols = [getattr(self, c) for c in self.columns()]
        for k in range(len(self)):
            yield [float(c[k]) for c in cols]


def sigma_potentials(grid, u, params):
    """Per-node ∫|e^{iσ_jΔ}u|^{p+2} dx."""
    shape = (-1,) + (1,) * grid.dimension
    phases = np.exp(-1j * params.sigma_nodes.reshape(shape) * grid.k2)
    w = grid.ifft(grid.fft(u) * phases)
    axes = tuple(range(1, grid.dimension + 1))
    return np.sum(np.abs(w) ** (params.power + 2), axis=axes) * grid.cell_volume


def record(trajectory, params=None, boundary_threshold=BOUNDARY_MASS_THRESHOLD):
    """One diagnostics row per stored checkpoint."""
    params = params or trajectory.params
    grid = trajectory.grid
    p = params.power
    n = len(trajectory.times)
    cols = {name: np.zeros(n) for name in DiagnosticsTimeSeries.columns()}
    cols['time'] = np.array(trajectory.times, dtype=float)
    flagged = []

    x_weight = grid.r2
    for k, (t, u, v) in enumerate(zip(trajectory.times, trajectory.fields, trajectory.profiles)):
        per_node = sigma_potentials(grid, u, params)
        nl = float(np.dot(params.sigma_weights, per_node))
        kinetic = grid.kinetic(u)
        w1 = grid.free_propagate(u, 1.0)
        # J(t)u = e^{itΔ} x e^{-itΔ}u, so its norm is ‖x v‖.
        ju = math.sqrt(grid.integrate(x_weight * np.abs(v) ** 2))

        cols['mass'][k] = grid.mass(u)
        cols['kinetic'][k] = kinetic
        cols['nl_potential'][k] = nl
        cols['energy_defocusing'][k] = kinetic + nl / (p + 2)
        cols['energy_focusing_CHL'][k] = kinetic - nl
        cols['energy_hamiltonian'][k] = kinetic + params.signed_coupling * nl / (p + 2)
        cols['Ju_norm'][k] = ju
        cols['pce'][k] = ju ** 2 + 8 * t * t / (p + 2) * nl
        cols['w_norm_p2'][k] = nl ** (1 / (p + 2))
        cols['w1_norm_p2'][k] = grid.integrate(np.abs(w1) ** (p + 2))
        cols['sigma_weighted_potential'][k] = float(
            np.dot(params.sigma_weights * params.sigma_nodes, per_node)
        )
        fraction = grid.boundary_mass_fraction(u)
        cols['boundary_mass_fraction'][k] = fraction
        if fraction > boundary_threshold:
            flagged.append(k)

    if flagged:
        logger.warning(
            f'{len(flagged)} of {n} checkpoints exceed boundary mass threshold '
            f'{boundary_threshold:.1e}, first at t={cols["time"][flagged[0]]:.6g}'
        )
    return DiagnosticsTimeSeries(
        **cols,
        dimension=grid.dimension,
        power=p,
        signed_coupling=params.signed_coupling,
        flagged=flagged,
    )


def conservation_drift(series):
    """Max relative drift of mass and of the conserved energy."""
    def drift(values):
        ref = values[0]
        if ref == 0:
            return float(np.max(np.abs(values - ref)))
        return float(np.max(np.abs(values - ref)) / abs(ref))

    return {'mass': drift(series.mass), 'energy': drift(series.energy_hamiltonian)}


@dataclass
class PceReport:
    variant: str
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    residual: np.ndarray
    aggregate: float
    # Weighted-potential terms of the right side; ≤ 0 for defocusing p > 8/d, t > 0.
    potential_term: np.ndarray
    sigma_term: np.ndarray

    def to_dict(self):
        return {
            'variant': self.variant,
            'aggregate_relative_residual': self.aggregate,
            'max_pointwise_residual': float(np.max(np.abs(self.residual))) if len(self.residual) else 0.0,
            'points': len(self.times),
            'window': [float(self.times[0]), float(self.times[-1])] if len(self.times) else None,
        }


def pce_identity_check(series, window, coefficient_variant=TWO_T_PLUS_1):
    """Compare d/dt of the pseudoconformal energy with its closed-form derivative.

    e(t) = ‖Ju‖² + λ·8t²/(p+2)·P with λ = sign·g, and

      e'(t) = λ/(p+2)·[(32 - 4dp)·t·P + (16 - 4dp)·Pσ - 8·c(t)·B(1)]

    where P = ∫₀¹∫|w|^{p+2}, Pσ = ∫₀¹σ∫|w|^{p+2}, B(1) = ∫|e^{iΔ}u|^{p+2}, and
    c(t) is t+1 or 2t+1 depending on the variant.
    """
    if coefficient_variant not in PCE_VARIANTS:
        raise ValueError(f'Unknown coefficient variant {coefficient_variant}')
    t_lo, t_hi = window
    if not t_lo < t_hi:
        raise ValueError(f'Empty window {window}')
    if t_lo <= 0 <= t_hi:
        raise ValueError(f'Window {window} contains t=0')

    t = series.time
    d, p, lam = series.dimension, series.power, series.signed_coupling
    e = series.Ju_norm ** 2 + lam * 8 * t ** 2 / (p + 2) * series.nl_potential

    interior = [k for k in range(1, len(t) - 1) if t_lo <= t[k] <= t_hi]
    if not interior:
        raise ValueError(f'No interior checkpoints in window {window}')
    idx = np.array(interior)
    spacing = np.max(np.abs(np.diff(t[idx[0] - 1: idx[-1] + 2])))
    if spacing > MAX_PCE_SPACING:
        logger.warning(f'Checkpoint spacing {spacing:g} is too coarse for centered differences')

    lhs = (e[idx + 1] - e[idx - 1]) / (t[idx + 1] - t[idx - 1])
    tk = t[idx]
    c = tk + 1 if coefficient_variant == T_PLUS_1 else 2 * tk + 1
    potential_term = lam * (32 - 4 * d * p) * tk / (p + 2) * series.nl_potential[idx]
    sigma_term = lam * (16 - 4 * d * p) / (p + 2) * series.sigma_weighted_potential[idx]
    boundary_term = -lam * 8 * c / (p + 2) * series.w1_norm_p2[idx]
    rhs = potential_term + sigma_term + boundary_term

    residual = lhs - rhs
    denom = np.linalg.norm(rhs)
    num = np.linalg.norm(residual)
    if denom == 0:
        aggregate = 0.0 if num == 0 else math.inf
    else:
        aggregate = float(num / denom)
    return PceReport(
        variant=coefficient_variant,
        times=tk,
        lhs=lhs,
        rhs=rhs,
        residual=residual,
        aggregate=aggregate,
        potential_term=potential_term,
        sigma_term=sigma_term,
    )


def compare_pce_variants(series, window):
    """Run both variants; return ({variant: report}, name of the smaller residual)."""
    reports = {v: pce_identity_check(series, window, v) for v in PCE_VARIANTS}
    best = min(PCE_VARIANTS, key=lambda v: reports[v].aggregate)
    return reports, best


@dataclass
class FitResult:
    exponent: float
    intercept: float
    r_squared: float
    window: Tuple[float, float]

    def to_dict(self):
        return {
            'exponent': self.exponent,
            'intercept': self.intercept,
            'r_squared': self.r_squared,
            'window': list(self.window),
        }


def power_fit(x, y):
    """Least-squares line through (log x, log y)."""
    if len(x) < 8:
        raise ValueError(f'Need at least 8 points for a fit, got {len(x)}')
    if np.any(np.asarray(y) <= 0):
        raise ValueError('Fitted quantity must be positive')
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    ss_res = float(np.sum((ly - (slope * lx + intercept)) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1 - ss_res / ss_tot))
    return float(slope), float(intercept), r2


def decay_fit(series, quantity, window):
    """Slope of log(quantity) against log⟨t⟩ over the window."""
    if quantity not in ('Ju_norm', 'w_norm_p2'):
        raise ValueError(f'Cannot fit {quantity}')
    t_lo, t_hi = window
    if not 0 < t_lo < t_hi:
        raise ValueError(f'Fit window must satisfy 0 < t_lo < t_hi, got {window}')
    mask = (series.time >= t_lo) & (series.time <= t_hi)
    slope, intercept, r2 = power_fit(japanese(series.time[mask]), series.column(quantity)[mask])
    return FitResult(slope, intercept, r2, (t_lo, t_hi))


def spacetime_norm(trajectory, params, q, r, sigma_mode=LQ_IN_SIGMA_AND_T, window=None):
    """‖e^{iσΔ}u‖ in L^q_{σ,t} L^r_x (or L^q_t L^∞_σ L^r_x) over the stored checkpoints.

    The t-integral is the trapezoidal rule on the checkpoint times.
    """
    if q < 1 or r < 1:
        raise ValueError(f'Need q, r >= 1, got q={q}, r={r}')
    if sigma_mode not in (SUP_OVER_SIGMA, LQ_IN_SIGMA_AND_T):
        raise ValueError(f'Unknown sigma mode {sigma_mode}')
    if math.isinf(q) and sigma_mode == LQ_IN_SIGMA_AND_T:
        raise ValueError('q must be finite when integrating in sigma and t')

    grid = trajectory.grid
    times = np.array(trajectory.times, dtype=float)
    keep = np.ones(len(times), dtype=bool)
    if window is not None:
        keep = (times >= min(window)) & (times <= max(window))
    times = times[keep]
    if len(times) == 0:
        return 0.0

    spec = NormSpec.lr(r)
    shape = (-1,) + (1,) * grid.dimension
    phases = np.exp(-1j * params.sigma_nodes.reshape(shape) * grid.k2)
    per_time = []
    for u in (f for f, k in zip(trajectory.fields, keep) if k):
        w = grid.ifft(grid.fft(u) * phases)
        a = np.array([grid.norm(wj, spec) for wj in w])
        if math.isinf(q):
            per_time.append(a.max())
        elif sigma_mode == SUP_OVER_SIGMA:
            per_time.append(a.max() ** q)
        else:
            per_time.append(float(np.dot(params.sigma_weights, a ** q)))
    per_time = np.array(per_time)

    if math.isinf(q):
        return float(per_time.max())
    if len(times) == 1:
        return 0.0
    integral = float(np.sum(0.5 * (per_time[1:] + per_time[:-1]) * np.abs(np.diff(times))))
    return integral ** (1 / q)


def scattering_norms(dimension, power):
    """Norms in which scattering is meaningful for (d, p). Undefined ones map to None."""
    report = exponent_report(dimension, power)
    return {
        'L2': L2,
        'H_s_c': NormSpec.sobolev(report.s_c) if report.s_c >= 0 else None,
        'FH_gamma': NormSpec.weighted(report.gamma) if report.gamma > 0 else None,
        'Sigma': NormSpec.sigma(),
    }


@dataclass
class ScatteringReport:
    times: np.ndarray
    differences: Dict[str, np.ndarray]
    scattering_state: np.ndarray
    undefined: List[str]

    def monotone_after(self, name, t_start):
        """Consecutive differences are nonincreasing once t >= t_start."""
        diffs = self.differences[name][self.times[1:] >= t_start]
        return bool(np.all(np.diff(diffs) <= 0))

    def final(self, name):
        return float(self.differences[name][-1])

    def to_dict(self):
        return {
            'undefined_norms': self.undefined,
            'final_difference': {k: self.final(k) for k in self.differences},
            'max_difference': {k: float(np.max(v)) for k, v in self.differences.items()},
        }


def scattering_profile(trajectory, norms=None):
    """Consecutive Cauchy differences of v(t_k) = e^{-it_kΔ}u(t_k)."""
    if len(trajectory.times) < 4:
        raise ValueError(f'Need at least 4 checkpoints, got {len(trajectory.times)}')
    params = trajectory.params
    if norms is None:
        norms = scattering_norms(params.dimension, params.power)
    grid = trajectory.grid
    undefined = [name for name, spec in norms.items() if spec is None]
    for name in undefined:
        logger.warning(f'Norm {name} is undefined for d={params.dimension}, p={params.power}')

    vs = trajectory.profiles
    differences = {
        name: np.array([grid.norm(b - a, spec) for a, b in zip(vs, vs[1:])])
        for name, spec in norms.items()
        if spec is not None
    }
    return ScatteringReport(
        times=np.array(trajectory.times, dtype=float),
        differences=differences,
        scattering_state=vs[-1].copy(),
        undefined=undefined,
    )


def transform_inner(grid, f, g):
    """∫ conj(f̂) ĝ dξ for fields given by their continuous-transform samples."""
    return complex(np.vdot(f, g)) * grid.dual_cell_volume


@dataclass
class NonscatteringReport:
    times: np.ndarray
    overlap: np.ndarray
    derivative_times: np.ndarray
    derivative: np.ndarray
    fit: Optional[FitResult]
    c0: complex
    expected_exponent: float
    increasing: bool
    ill_conditioned: bool

    def to_dict(self):
        return {
            'fit': self.fit.to_dict() if self.fit else None,
            'c0': [self.c0.real, self.c0.imag],
            'expected_exponent': self.expected_exponent,
            'overlap_increasing': self.increasing,
            'ill_conditioned': self.ill_conditioned,
        }


def nonscattering_probe(trajectory, psi, window=(10.0, 100.0)):
    """Track Im⟨u(t), e^{itΔ}ψ⟩ and fit its time derivative against a power of t.

    ⟨u(t), e^{itΔ}ψ⟩ = ⟨v(t), ψ⟩ by unitarity, so the stored profiles are used.
    """
    grid = trajectory.grid
    params = trajectory.params
    d, p = params.dimension, params.power
    if not (p <= 1 and p <= 2 / d):
        logger.warning(f'p={p} is outside the long-range regime p <= min(1, 2/d)')
    psi = grid.check_field(psi)

    times = np.array(trajectory.times, dtype=float)
    overlap = np.array([grid.inner(v, psi).imag for v in trajectory.profiles])

    phi = trajectory.profiles[0]
    phi_hat = grid.fourier_transform(phi)
    c0 = transform_inner(grid, np.abs(phi_hat) ** p * phi_hat, grid.fourier_transform(psi))

    deriv_times = times[1:-1]
    derivative = (overlap[2:] - overlap[:-2]) / (times[2:] - times[:-2])
    mask = (deriv_times >= window[0]) & (deriv_times <= window[1])
    fit = None
    ill_conditioned = bool(np.any(derivative[mask] <= 0)) or mask.sum() < 8
    if ill_conditioned:
        logger.warning('Overlap derivative is not positive on the window; no fit')
    else:
        slope, intercept, r2 = power_fit(deriv_times[mask], derivative[mask])
        fit = FitResult(slope, intercept, r2, tuple(window))

    in_window = (times >= window[0]) & (times <= window[1])
    increasing = bool(np.all(np.diff(overlap[in_window]) > 0))
    return NonscatteringReport(
        times=times,
        overlap=overlap,
        derivative_times=deriv_times,
        derivative=derivative,
        fit=fit,
        c0=c0,
        expected_exponent=-d * p / 2,
        increasing=increasing,
        ill_conditioned=ill_conditioned,
    )


def reversed_initial_data(grid, u0):
    """e^{-iΔ}·conj(u0): forward data whose solution mirrors u backward in time."""
    return grid.free_propagate(np.conj(grid.check_field(u0)), -1.0)


@dataclass
class TimeReversalReport:
    field_deviation: float
    energy_deviation: float

    def to_dict(self):
        return {
            'max_relative_field_deviation': self.field_deviation,
            'max_relative_energy_deviation': self.energy_deviation,
        }


def time_reversal_check(forward, backward):
    """Compare v(t) with e^{-iΔ}·conj(u(-t)) along matched checkpoints.

    `backward` runs u from 0 to -T; `forward` runs v from reversed_initial_data(u(0)).
    """
    if len(forward.times) != len(backward.times) or not np.allclose(
        forward.times, -np.array(backward.times), rtol=0, atol=1e-12
    ):
        raise ValueError('Forward and backward checkpoint schedules do not mirror each other')
    grid = forward.grid
    if grid != backward.grid:
        raise ValueError('Forward and backward runs use different grids')

    field_dev = 0.0
    for v, u in zip(forward.fields, backward.fields):
        mirrored = grid.free_propagate(np.conj(u), -1.0)
        scale = math.sqrt(grid.mass(mirrored))
        dev = math.sqrt(grid.mass(v - mirrored))
        field_dev = max(field_dev, dev / scale if scale > 0 else dev)

    e_v = record(forward).energy_focusing_CHL
    e_u = record(backward).energy_focusing_CHL
    scale = float(np.max(np.abs(e_u)))
    gap = float(np.max(np.abs(e_v - e_u)))
    energy_dev = gap / scale if scale > 0 else gap
    return TimeReversalReport(field_dev, energy_dev)


def asymptotic_profile_error(grid, u, t, phi):
    """Relative L² distance between |u(t)| and (2t)^{-d/2}|φ̂(x/2t)|."""
    if not t > 0:
        raise ValueError(f'Asymptotic profile needs t > 0, got {t}')
    if t < 1:
        logger.warning(f't={t} is too early for the dispersive profile')
    u = grid.check_field(u)
    modulus = np.abs(grid.fourier_transform(phi))

    shifted = np.fft.fftshift(grid.xi)
    table = np.fft.fftshift(modulus)
    points = [c / (2 * t) for c in grid.coords]
    if grid.dimension == 1:
        profile = np.interp(points[0], shifted, table, left=0.0, right=0.0)
    else:
        interpolator = RegularGridInterpolator(
            (shifted, shifted), table, bounds_error=False, fill_value=0.0
        )
        profile = interpolator(np.stack(points, axis=-1))
    profile = profile * (2 * t) ** (-grid.dimension / 2)

    norm_u = math.sqrt(grid.mass(u))
    gap = math.sqrt(grid.integrate((np.abs(u) - profile) ** 2))
    if norm_u == 0:
        return gap
    return gap / norm_u
