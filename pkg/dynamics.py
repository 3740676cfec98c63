"""The σ-averaged DMNLS nonlinearity and an interaction-picture RK4 stepper.

    i ∂t u + Δu = sign · g · ∫₀¹ e^{-iσΔ}[|e^{iσΔ}u|^p e^{iσΔ}u] dσ

with sign = +1 (defocusing) or -1 (focusing) and coupling g (normally 1).
The stepper advances v(t) = e^{-itΔ}u(t), so the linear flow is exact.
"""

from dataclasses import dataclass, field
import logging
import math
from typing import List, Optional

import numpy as np

from spectral import BOUNDARY_MASS_THRESHOLD


logger = logging.getLogger(__name__)

DEFOCUSING = 'defocusing'
FOCUSING = 'focusing'
SIGNS = {DEFOCUSING: 1, FOCUSING: -1}

COMPLETED = 'completed'
BLOWUP = 'blowup_detected'
INVALID_BOUNDARY = 'invalidated_boundary_mass'
STEP_BUDGET = 'step_budget_exhausted'


class NonlinearityOverflow(FloatingPointError):
    pass


class EvolutionError(RuntimeError):
    """Integration could not continue. Carries what was computed so far."""

    def __init__(self, message, time, trajectory):
        super().__init__(f'{message} at t={time:.6g}')
        self.time = time
        self.trajectory = trajectory


def gauss_legendre(n, a=0.0, b=1.0):
    """n Gauss–Legendre nodes and weights on [a, b]."""
    if n < 1:
        raise ValueError(f'Need at least one quadrature node, got {n}')
    nodes, weights = np.polynomial.legendre.leggauss(n)
    half = (b - a) / 2
    return a + half * (nodes + 1), half * weights


def composite_gauss_legendre(a, b, panels, nodes_per_panel):
    edges = np.linspace(a, b, panels + 1)
    parts = [gauss_legendre(nodes_per_panel, lo, hi) for lo, hi in zip(edges, edges[1:])]
    return (
        np.concatenate([n for n, _ in parts]),
        np.concatenate([w for _, w in parts]),
    )


@dataclass
class ModelParams:
    dimension: int
    power: float
    sign: str = DEFOCUSING
    sigma_nodes: Optional[np.ndarray] = None
    sigma_weights: Optional[np.ndarray] = None
    # 0 switches the nonlinearity off.
    coupling: float = 1.0

    def __post_init__(self):
        if self.sigma_nodes is None:
            self.sigma_nodes, self.sigma_weights = gauss_legendre(16)
        self.sigma_nodes = np.asarray(self.sigma_nodes, dtype=float)
        self.sigma_weights = np.asarray(self.sigma_weights, dtype=float)
        if not self.power > 0:
            raise ValueError(f'power must be positive, got {self.power}')
        if self.sign not in SIGNS:
            raise ValueError(f'Unknown sign {self.sign!r}')
        if self.sigma_nodes.shape != self.sigma_weights.shape or self.sigma_nodes.ndim != 1:
            raise ValueError('sigma nodes and weights must be 1-D arrays of equal length')
        if np.any(self.sigma_nodes < 0) or np.any(self.sigma_nodes > 1):
            raise ValueError('sigma nodes must lie in [0, 1]')
        if abs(self.sigma_weights.sum() - 1) > 1e-12:
            raise ValueError(f'sigma weights sum to {self.sigma_weights.sum()!r}, not 1')

    @staticmethod
    def with_nodes(dimension, power, sign=DEFOCUSING, n_nodes=16, coupling=1.0):
        nodes, weights = gauss_legendre(n_nodes)
        return ModelParams(dimension, power, sign, nodes, weights, coupling)

    @property
    def n_nodes(self):
        return len(self.sigma_nodes)

    @property
    def signed_coupling(self):
        return SIGNS[self.sign] * self.coupling


@dataclass
class StepperConfig:
    dt: float = 1e-3
    adaptive: bool = False
    tol: float = 1e-9
    max_dt: float = 1e-1
    min_dt: float = 1e-10
    blowup_gradient_factor: float = 1e3
    boundary_threshold: float = BOUNDARY_MASS_THRESHOLD
    # Accepted plus rejected steps; 0 means no limit.
    max_steps: int = 0
    # Blowup once ‖∇u‖ > resolution_fraction · k_max · ‖u‖; 0 turns it off.
    resolution_fraction: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f'dt must be positive, got {self.dt}')
        if not self.tol > 0:
            raise ValueError(f'tol must be positive, got {self.tol}')
        if not 0 < self.min_dt <= self.dt <= self.max_dt:
            raise ValueError(
                f'Need 0 < min_dt <= dt <= max_dt, got {self.min_dt}, {self.dt}, {self.max_dt}'
            )
        if not self.blowup_gradient_factor > 1:
            raise ValueError('blowup_gradient_factor must exceed 1')
        if not (isinstance(self.max_steps, int) and self.max_steps >= 0):
            raise ValueError(f'max_steps must be a non-negative integer, got {self.max_steps!r}')
        if not 0 <= self.resolution_fraction < 1:
            raise ValueError(f'resolution_fraction must lie in [0, 1), got {self.resolution_fraction}')


@dataclass
class Trajectory:
    params: ModelParams
    grid: object
    times: List[float] = field(default_factory=list)
    fields: List[np.ndarray] = field(default_factory=list)
    # v(t_k) = e^{-it_kΔ}u(t_k) exactly as integrated.
    profiles: List[np.ndarray] = field(default_factory=list)
    status: str = COMPLETED
    failure_time: Optional[float] = None
    steps: int = 0
    rejected_steps: int = 0

    def __len__(self):
        return len(self.times)

    def add(self, t, v):
        if self.times:
            last = self.times[-1]
            if t == last:
                raise ValueError(f'Duplicate checkpoint time {t}')
            if len(self.times) > 1 and (t - last) * (last - self.times[0]) < 0:
                raise ValueError(f'Checkpoint times must be monotone, got {t} after {last}')
        self.times.append(float(t))
        self.profiles.append(v.copy())
        self.fields.append(self.grid.free_propagate(v, t))

    @property
    def is_blowup(self):
        return self.status == BLOWUP

    @staticmethod
    def from_fields(params, grid, times, fields):
        """Rebuild a trajectory from stored u(t_k), e.g. loaded from disk."""
        traj = Trajectory(params, grid)
        for t, u in zip(times, fields):
            traj.add(t, grid.free_propagate(u, -t))
        return traj


def nonlinearity_from_hat(grid, uhat, params):
    """Transform of Σ_j ω_j e^{-iσ_jΔ}[|w_j|^p w_j], w_j = e^{iσ_jΔ}u."""
    shape = (-1,) + (1,) * grid.dimension
    sigma = params.sigma_nodes.reshape(shape)
    weights = params.sigma_weights.reshape(shape)

    phases = np.exp(-1j * sigma * grid.k2)
    w = grid.ifft(uhat * phases)
    with np.errstate(over='ignore', invalid='ignore'):
        f = np.abs(w) ** params.power * w
    if not np.all(np.isfinite(f)):
        raise NonlinearityOverflow(
            f'|w|^p w overflowed (max |w| = {np.max(np.abs(w)):.3e}, p = {params.power})'
        )
    return np.sum(weights * np.conj(phases) * grid.fft(f), axis=0)


def dmnls_nonlinearity(grid, u, params):
    u = grid.check_field(u)
    return grid.ifft(nonlinearity_from_hat(grid, grid.fft(u), params))


def rhs_interaction_picture(grid, v, t, params):
    """dv/dt = -i·sign·g·e^{-itΔ} N(e^{itΔ}v)."""
    v = grid.check_field(v)
    if params.coupling == 0:
        return grid.zeros()
    symbol = grid.propagator_symbol(t)
    nhat = nonlinearity_from_hat(grid, grid.fft(v) * symbol, params)
    return -1j * params.signed_coupling * grid.ifft(nhat * np.conj(symbol))


def rk4_step(grid, v, t, dt, params):
    k1 = rhs_interaction_picture(grid, v, t, params)
    k2 = rhs_interaction_picture(grid, v + dt / 2 * k1, t + dt / 2, params)
    k3 = rhs_interaction_picture(grid, v + dt / 2 * k2, t + dt / 2, params)
    k4 = rhs_interaction_picture(grid, v + dt * k3, t + dt, params)
    return v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def gradient_norm(grid, v):
    # ‖∇u‖ = ‖∇v‖ since the free flow commutes with derivatives.
    return math.sqrt(2 * grid.kinetic(v))


class Stepper:
    """Holds the current step size; step-doubling error control when adaptive."""

    def __init__(self, grid, params, cfg, direction):
        self.grid = grid
        self.params = params
        self.cfg = cfg
        self.direction = direction
        self.dt = cfg.dt
        self.steps = 0
        self.rejected = 0

    def step(self, v, t, max_step):
        """Advance by at most max_step > 0. Returns (v, t), or None if dt fell below min_dt."""
        if not self.cfg.adaptive:
            h = min(self.dt, max_step)
            self.steps += 1
            return rk4_step(self.grid, v, t, self.direction * h, self.params), t + self.direction * h

        while True:
            h = min(self.dt, max_step)
            s = self.direction * h
            full = rk4_step(self.grid, v, t, s, self.params)
            half = rk4_step(self.grid, v, t, s / 2, self.params)
            half = rk4_step(self.grid, half, t + s / 2, s / 2, self.params)
            error = math.sqrt(self.grid.mass(half - full))
            target = self.cfg.tol * (1 + math.sqrt(self.grid.mass(v)))
            if error <= target:
                self.steps += 1
                if error < target / 32 and h == self.dt:
                    self.dt = min(2 * self.dt, self.cfg.max_dt)
                return half, t + s
            self.rejected += 1
            self.dt = h / 2
            if self.dt < self.cfg.min_dt:
                return None


def checkpoint_schedule(checkpoint_times, t_final):
    """Distinct checkpoint times ordered in the direction of integration."""
    direction = -1 if t_final < 0 else 1
    lo, hi = min(0.0, t_final), max(0.0, t_final)
    for t in checkpoint_times:
        if not lo <= t <= hi:
            raise ValueError(f'Checkpoint {t} lies outside [{lo}, {hi}]')
    return sorted(set(float(t) for t in checkpoint_times), key=lambda t: direction * t)


def evolve(grid, u0, params, cfg, t_final, checkpoint_times):
    """Integrate from t=0 towards t_final (either sign), storing every checkpoint.

    Returns a Trajectory whose status is `completed`, `blowup_detected`,
    `invalidated_boundary_mass` or `step_budget_exhausted`. Overflow in the nonlinearity raises
    EvolutionError carrying the partial trajectory.
    """
    u0 = grid.check_field(u0)
    if grid.dimension != params.dimension:
        raise ValueError(f'Grid is {grid.dimension}-D but the model is {params.dimension}-D')
    schedule = checkpoint_schedule(checkpoint_times, t_final)
    direction = -1 if t_final < 0 else 1

    traj = Trajectory(params, grid)
    stepper = Stepper(grid, params, cfg, direction)
    v = u0.copy()
    t = 0.0
    initial_gradient = gradient_norm(grid, v)
    blowup_level = cfg.blowup_gradient_factor * initial_gradient
    # ‖∇u‖ ≤ k_max‖u‖ on the grid, and the mass is conserved.
    resolution_level = cfg.resolution_fraction * math.sqrt(float(grid.k2.max()) * grid.mass(v))

    report_every = max(1, len(schedule) // 10)
    try:
        for n, target in enumerate(schedule):
            while direction * (target - t) > 0:
                result = stepper.step(v, t, direction * (target - t))
                if result is None:
                    logger.info(f'Step size fell below {cfg.min_dt:g} near t={t:.6g}')
                    return _halt(traj, stepper, BLOWUP, t)
                v, t = result
                if abs(target - t) <= 1e-12 * max(1.0, abs(target)):
                    t = target
                grad = gradient_norm(grid, v)
                if initial_gradient > 0 and grad > blowup_level:
                    logger.info(
                        f'Gradient norm grew {cfg.blowup_gradient_factor:g}x by t={t:.6g}'
                    )
                    return _halt(traj, stepper, BLOWUP, t)
                if resolution_level > 0 and grad > resolution_level:
                    logger.info(f'Gradient norm reached the grid scale by t={t:.6g}')
                    return _halt(traj, stepper, BLOWUP, t)
                if cfg.max_steps and stepper.steps + stepper.rejected >= cfg.max_steps:
                    logger.warning(f'Step budget of {cfg.max_steps} exhausted at t={t:.6g}')
                    return _halt(traj, stepper, STEP_BUDGET, t)
            traj.add(target, v)
            if traj.status == COMPLETED and not grid.boundary_ok(
                traj.fields[-1], cfg.boundary_threshold
            ):
                traj.status = INVALID_BOUNDARY
                traj.failure_time = target
            if (n + 1) % report_every == 0:
                logger.debug(f'Checkpoint {n + 1}/{len(schedule)} at t={target:.6g}')
    except NonlinearityOverflow as e:
        _halt(traj, stepper, BLOWUP, t)
        raise EvolutionError(str(e), t, traj) from e

    traj.steps = stepper.steps
    traj.rejected_steps = stepper.rejected
    logger.info(
        f'Evolved to t={t:.6g} in {stepper.steps} steps '
        f'({stepper.rejected} rejected), status {traj.status}'
    )
    return traj


def _halt(traj, stepper, status, t):
    traj.status = status
    traj.failure_time = t
    traj.steps = stepper.steps
    traj.rejected_steps = stepper.rejected
    return traj
