"""Periodic grids and the Fourier-multiplier operators that act on them.

A field is a complex numpy array of shape `grid.shape`. All transforms use
the unitary (`norm='ortho'`) FFT pair, so Parseval holds without constants.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np
import scipy.fft as fft


logger = logging.getLogger(__name__)

# Runs with more than this fraction of mass in the outer 10% of the box are
# invalid: x-weighted quantities see the wraparound.
BOUNDARY_MASS_THRESHOLD = 1e-8
BOUNDARY_LAYER = 0.1

# Below this |t| the fractional Galilean operator uses |x|^gamma directly.
T_EPS = 1e-8


class CorruptFieldError(ValueError):
    pass


def is_power_of_two(n):
    return n > 0 and (n & (n - 1)) == 0


class Grid:
    """Centered periodic box [-L/2, L/2)^d with its dual frequency lattice."""

    def __init__(self, dimension, points_per_axis, box_length):
        self.dimension = dimension
        self.points_per_axis = points_per_axis
        self.box_length = float(box_length)
        self.spacing = self.box_length / points_per_axis

        n = points_per_axis
        self.x = -self.box_length / 2 + self.spacing * np.arange(n)
        self.xi = 2 * np.pi * fft.fftfreq(n, d=self.spacing)

        self.shape = (n,) * dimension
        self.size = n ** dimension
        self.cell_volume = self.spacing ** dimension

        self.coords = np.meshgrid(*[self.x] * dimension, indexing='ij')
        self.freqs = np.meshgrid(*[self.xi] * dimension, indexing='ij')
        self.r2 = sum(c ** 2 for c in self.coords)
        self.k2 = sum(k ** 2 for k in self.freqs)

        # iξ has no partner for the Nyquist mode; zero it.
        nyquist = np.ones(n)
        nyquist[n // 2] = 0
        self.odd_freqs = [
            k * m
            for k, m in zip(
                self.freqs,
                np.meshgrid(*[nyquist] * dimension, indexing='ij'),
            )
        ]

    def __repr__(self):
        return (
            f'Grid(dimension={self.dimension}, '
            f'points_per_axis={self.points_per_axis}, '
            f'box_length={self.box_length})'
        )

    def __eq__(self, other):
        return isinstance(other, Grid) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def key(self):
        return (self.dimension, self.points_per_axis, self.box_length)

    # Transforms act on the trailing `dimension` axes, so a stack of
    # fields (one per σ node) goes through in one call.

    def fft(self, u):
        return fft.fftn(u, axes=self._axes(u), norm='ortho')

    def ifft(self, uhat):
        return fft.ifftn(uhat, axes=self._axes(uhat), norm='ortho')

    def _axes(self, a):
        return tuple(range(np.ndim(a) - self.dimension, np.ndim(a)))

    def multiply(self, u, symbol):
        return self.ifft(self.fft(u) * symbol)

    def fourier_transform(self, u):
        """Samples of û(ξ) = (2π)^{-d/2} ∫ e^{-ix·ξ} u dx at the lattice frequencies."""
        x0 = -self.box_length / 2
        shift = np.exp(-1j * x0 * sum(self.freqs))
        scale = self.cell_volume * math.sqrt(self.size) / (2 * np.pi) ** (self.dimension / 2)
        return scale * shift * self.fft(u)

    @property
    def dual_cell_volume(self):
        return (2 * np.pi / self.box_length) ** self.dimension

    def check_field(self, u):
        u = np.asarray(u)
        if u.shape != self.shape:
            raise ValueError(f'Field shape {u.shape} does not match grid {self.shape}')
        if not np.all(np.isfinite(u)):
            raise CorruptFieldError('Field contains NaN or Inf values')
        return u.astype(complex, copy=False)

    def zeros(self):
        return np.zeros(self.shape, dtype=complex)

    # operators

    def propagator_symbol(self, t):
        """Fourier symbol of e^{itΔ}."""
        return np.exp(-1j * t * self.k2)

    def free_propagate(self, u, t):
        """e^{itΔ}u."""
        u = self.check_field(u)
        if t == 0:
            return u.copy()
        return self.multiply(u, self.propagator_symbol(t))

    def gradient(self, u):
        u = self.check_field(u)
        uhat = self.fft(u)
        return [self.ifft(1j * k * uhat) for k in self.odd_freqs]

    def laplacian(self, u):
        u = self.check_field(u)
        return self.multiply(u, -self.k2)

    def galilean_apply(self, u, t):
        """Components of J(t)u = x u + 2it ∇u."""
        u = self.check_field(u)
        if t == 0:
            return [x * u for x in self.coords]
        return [
            x * u + 2j * t * du
            for x, du in zip(self.coords, self.gradient(u))
        ]

    def fractional_galilean(self, u, t, gamma):
        """J^γ(t)u = e^{i|x|²/4t} (-4t²Δ)^{γ/2} e^{-i|x|²/4t} u."""
        if not 0 < gamma <= 1:
            raise ValueError(f'gamma must lie in (0, 1], got {gamma}')
        u = self.check_field(u)
        if abs(t) < T_EPS:
            return self.r2 ** (gamma / 2) * u
        phase = np.exp(1j * self.r2 / (4 * t))
        symbol = (4 * t * t * self.k2) ** (gamma / 2)
        return phase * self.multiply(np.conj(phase) * u, symbol)

    # integrals

    def integrate(self, density):
        return float(np.sum(density).real) * self.cell_volume

    def inner(self, f, g):
        """<f, g> = ∫ conj(f) g dx."""
        return complex(np.vdot(f, g)) * self.cell_volume

    def mass(self, u):
        return self.integrate(np.abs(u) ** 2)

    def kinetic(self, u):
        """½‖∇u‖², Nyquist mode included so it matches the propagator."""
        return 0.5 * self.cell_volume * float(np.sum(self.k2 * np.abs(self.fft(u)) ** 2))

    def norm(self, u, spec):
        u = self.check_field(u)
        if spec.kind == 'Lr':
            if math.isinf(spec.value):
                return float(np.max(np.abs(u))) if u.size else 0.0
            return self.integrate(np.abs(u) ** spec.value) ** (1 / spec.value)
        if spec.kind == 'SobolevHs':
            return self._symbol_norm(u, (1 + self.k2) ** (spec.value / 2))
        if spec.kind == 'HomSobolev':
            return self._symbol_norm(u, self.k2 ** (spec.value / 2))
        if spec.kind == 'WeightedL2':
            return math.sqrt(self.integrate(self.r2 ** spec.value * np.abs(u) ** 2))
        if spec.kind == 'Sigma':
            h1 = self._symbol_norm(u, np.sqrt(1 + self.k2))
            xu = math.sqrt(self.integrate(self.r2 * np.abs(u) ** 2))
            return math.sqrt(h1 ** 2 + xu ** 2)
        raise ValueError(f'Unknown norm kind {spec.kind}')

    def _symbol_norm(self, u, symbol):
        uhat = self.fft(u)
        return math.sqrt(self.cell_volume * float(np.sum(np.abs(symbol * uhat) ** 2)))

    def boundary_mass_fraction(self, u):
        """Fraction of the mass within the outer 10% of the box on any axis."""
        total = self.mass(u)
        if total == 0:
            return 0.0
        edge = self.box_length / 2 * (1 - 2 * BOUNDARY_LAYER)
        outer = np.zeros(self.shape, dtype=bool)
        for x in self.coords:
            outer |= np.abs(x) > edge
        return self.integrate(np.abs(u[outer]) ** 2) / total

    def boundary_ok(self, u, threshold=BOUNDARY_MASS_THRESHOLD):
        fraction = self.boundary_mass_fraction(u)
        if fraction > threshold:
            logger.warning(f'Boundary mass fraction {fraction:.3e} exceeds {threshold:.1e}')
            return False
        return True


def make_grid(dimension, points_per_axis, box_length):
    if dimension not in (1, 2):
        raise ValueError(f'Only 1-D and 2-D grids are simulated, got dimension={dimension}')
    if not is_power_of_two(points_per_axis) or points_per_axis < 16:
        raise ValueError(
            f'points_per_axis must be a power of two >= 16, got {points_per_axis}'
        )
    if not box_length > 0:
        raise ValueError(f'box_length must be positive, got {box_length}')
    return Grid(dimension, points_per_axis, box_length)


@dataclass(frozen=True)
class NormSpec:
    """Which norm to take. `value` is r, s or γ depending on `kind`."""
    kind: str
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ('Lr', 'SobolevHs', 'HomSobolev', 'WeightedL2', 'Sigma'):
            raise ValueError(f'Unknown norm kind {self.kind}')
        if self.kind == 'Lr' and not self.value >= 1:
            raise ValueError(f'Lebesgue exponent must be >= 1, got {self.value}')
        if self.value < 0:
            raise ValueError(f'Norm parameter must be nonnegative, got {self.value}')

    @staticmethod
    def lr(r):
        return NormSpec('Lr', r)

    @staticmethod
    def sobolev(s):
        return NormSpec('SobolevHs', s)

    @staticmethod
    def hom_sobolev(s):
        return NormSpec('HomSobolev', s)

    @staticmethod
    def weighted(gamma):
        return NormSpec('WeightedL2', gamma)

    @staticmethod
    def sigma():
        return NormSpec('Sigma')


L2 = NormSpec.lr(2)
