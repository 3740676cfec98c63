#!/usr/bin/env python
"""Exponent arithmetic for the power nonlinearity |u|^p u in d dimensions.

Everything here is a closed-form function of (d, p). Quantities that are
not defined for a given (d, p) are None, never zero.
"""

from dataclasses import asdict, dataclass
import json
import math
import sys
from typing import Optional, Tuple


# Large-data scattering in one dimension needs p > P0.
P0 = 3 + math.sqrt(5)

SNAP = 1e-12
BOUNDARY_CONVENTION = (
    'half-open intervals; p within 1e-12 (relative) of 2/d, 4/d or 4/(d-2) '
    'is classified as that boundary'
)
MASS_CRITICAL_R_C_NOTE = 'at p = 4/d the intercritical r_c equals r; neither open nor closed endpoint is asserted'

LONG_RANGE = 'long_range'
MASS_SUBCRITICAL = 'mass_subcritical'
MASS_CRITICAL = 'mass_critical'
INTERCRITICAL = 'intercritical'
ENERGY_CRITICAL = 'energy_critical'
SUPERCRITICAL = 'supercritical'


def near(a, b):
    return abs(a - b) <= SNAP * max(1.0, abs(b))


def at_least(p, b):
    return p > b or near(p, b)


def at_most(p, b):
    return p < b or near(p, b)


def energy_critical_power(d):
    return 4 / (d - 2) if d >= 3 else math.inf


def classify(d, p):
    if at_most(p, 2 / d):
        return LONG_RANGE
    if near(p, 4 / d):
        return MASS_CRITICAL
    if p < 4 / d:
        return MASS_SUBCRITICAL
    if d >= 3:
        if near(p, energy_critical_power(d)):
            return ENERGY_CRITICAL
        if p > energy_critical_power(d):
            return SUPERCRITICAL
    return INTERCRITICAL


def strauss_exponent(d):
    return (2 - d + math.sqrt(d * d + 12 * d + 4)) / (2 * d)


def intercritical_pair(d, p):
    """(q, r, r_c) for 4/d <= p <= 4/(d-2), or None."""
    if not (at_least(p, 4 / d) and at_most(p, energy_critical_power(d))):
        return None
    q = p + 2
    r = 2 * d * (p + 2) / (2 * (d - 2) + d * p)
    r_c = d * p * (p + 2) / 4
    return q, r, r_c


def subcritical_triple(d, p):
    """(q, r, r_c) for max(2/d, 4/(d+2)) <= p < 4/d (p > 2/d strictly), or None."""
    if at_most(p, 2 / d) or not at_least(p, 4 / (d + 2)) or at_least(p, 4 / d):
        return None
    q = 2 * (p + 2) / (d * p - 2)
    r = 2 * d * (p + 2) / (4 + d * (2 - p))
    r_c = d * p * (p + 2) / (2 * (d * p - 2))
    return q, r, r_c


def above_strichartz_line(d, p):
    """4/d < p, capped at 4/(d-2) when d >= 3."""
    return p > 4 / d and not near(p, 4 / d) and at_most(p, energy_critical_power(d))


def q_threshold(d, p):
    if not above_strichartz_line(d, p):
        return None
    if p > 8 / d and not near(p, 8 / d):
        return 2 * p / (d * p - 4)
    return 8 * p / (d * p - 4) ** 2


def decay_c1(d, p):
    if not above_strichartz_line(d, p):
        return None
    if p > 8 / d and not near(p, 8 / d):
        return 0.0
    return 2 - d * p / 4


def decay_rate_w(d, p):
    if not above_strichartz_line(d, p):
        return None
    if p > 8 / d and not near(p, 8 / d):
        return -2 / (p + 2)
    return -(d * p - 4) / (2 * (p + 2))


@dataclass
class ExponentReport:
    d: int
    p: float
    s_c: float
    gamma: float
    regime: str
    intercritical_pair: Optional[Tuple[float, float]]
    intercritical_r_c: Optional[float]
    subcritical_triple: Optional[Tuple[float, float, float]]
    Q_threshold: Optional[float]
    p0: float
    decay_c1: Optional[float]
    decay_rate_w: Optional[float]
    one_d_scattering_ok: Optional[bool]
    strauss_exponent: float
    boundary_convention: str = BOUNDARY_CONVENTION
    r_c_note: Optional[str] = None

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def exponent_report(d, p):
    if d < 1 or int(d) != d:
        raise ValueError(f'd must be a positive integer, got {d}')
    if not p > 0:
        raise ValueError(f'p must be positive, got {p}')
    d = int(d)
    pair = intercritical_pair(d, p)
    regime = classify(d, p)
    return ExponentReport(
        d=d,
        p=p,
        s_c=d / 2 - 2 / p,
        gamma=2 / p - d / 2,
        regime=regime,
        intercritical_pair=pair[:2] if pair else None,
        intercritical_r_c=pair[2] if pair else None,
        subcritical_triple=subcritical_triple(d, p),
        Q_threshold=q_threshold(d, p),
        p0=P0,
        decay_c1=decay_c1(d, p),
        decay_rate_w=decay_rate_w(d, p),
        one_d_scattering_ok=(p > P0) if d == 1 else None,
        strauss_exponent=strauss_exponent(d),
        r_c_note=MASS_CRITICAL_R_C_NOTE if regime == MASS_CRITICAL else None,
    )


def admissible(q, r, d):
    """2 <= q, r <= inf, 2/q + d/r = d/2 and (d, q, r) != (2, 2, inf)."""
    if not (2 <= q <= math.inf and 2 <= r <= math.inf):
        return False
    if d == 2 and q == 2 and r == math.inf:
        return False
    return abs(2 / q + d / r - d / 2) <= SNAP


@dataclass
class CriticalPair:
    q_c: float
    r_c: float
    q: float
    r: float


def critical_pair(d, p, q_c):
    """r_c on the line 2/q_c + d/r_c = 2/p plus its companion admissible (q, r).

    q solves p/q_c + 2/q = 1 and r is fixed by admissibility, which also
    gives p/r_c + 2/r = 1. In d=1 the companion only exists once q >= 4.
    """
    Q = q_threshold(d, p)
    if Q is None:
        raise ValueError(f'No critical pair below the Strichartz line (d={d}, p={p})')
    if not q_c > max(p + 1, Q):
        raise ValueError(f'q_c must exceed max(p+1, Q) = {max(p + 1, Q)}, got {q_c}')
    r_c = d / (2 / p - 2 / q_c)
    q = 2 / (1 - p / q_c)
    slack = d / 2 - 2 / q
    if slack <= 0:
        raise ValueError(f'No admissible companion for q={q} in d={d}')
    r = d / slack
    if not admissible(q, r, d):
        raise ValueError(f'Companion ({q}, {r}) is not admissible in d={d}')
    return CriticalPair(q_c=q_c, r_c=r_c, q=q, r=r)


def default_critical_pair(d, p):
    """q_c one above max(p+1, Q), or None where no companion pair exists."""
    Q = q_threshold(d, p)
    if Q is None:
        return None
    try:
        return critical_pair(d, p, max(p + 1, Q) + 1)
    except ValueError:
        return None


def one_d_pair(p):
    """Space-time exponents (L^{2p}_t, L^p_x) of the one-dimensional large-data argument."""
    return 2 * p, p


def identity_residuals(report):
    """Residual of every scaling identity that applies to `report`."""
    d, p = report.d, report.p
    out = {'s_c_plus_gamma': report.s_c + report.gamma}
    if report.intercritical_pair:
        q, r = report.intercritical_pair
        r_c = report.intercritical_r_c
        out.update({
            'intercritical_admissible': 2 / q + d / r - d / 2,
            'intercritical_r_c': d / r_c - (d / r - report.s_c),
            'intercritical_time_dual': (1 - 1 / q) - (p + 1) / q,
            'intercritical_space_dual': (1 - 1 / r) - (p / r_c + 1 / r),
        })
    if report.subcritical_triple:
        q, r, r_c = report.subcritical_triple
        out.update({
            'subcritical_admissible': 2 / q + d / r - d / 2,
            'subcritical_r_c': d / r_c - (d / r - report.gamma),
            'subcritical_time_dual': (1 - 1 / q) - ((p + 1) / q + p * report.gamma),
            'subcritical_space_dual': (1 - 1 / r) - (p / r_c + 1 / r),
        })
    pair = default_critical_pair(d, p)
    if pair is not None:
        out.update({
            'critical_line': 2 / pair.q_c + d / pair.r_c - 2 / p,
            'critical_admissible': 2 / pair.q + d / pair.r - d / 2,
            'critical_companion': p / pair.q_c + 2 / pair.q - 1,
            'critical_companion_space': p / pair.r_c + 2 / pair.r - 1,
        })
    return out


def emitted_pairs(report):
    pairs = []
    if report.intercritical_pair:
        pairs.append(report.intercritical_pair)
    if report.subcritical_triple:
        pairs.append(report.subcritical_triple[:2])
    pair = default_critical_pair(report.d, report.p)
    if pair is not None:
        pairs.append((pair.q, pair.r))
    return pairs


TABLE_COLUMNS = [
    'd', 'p', 's_c', 'gamma', 'regime',
    'intercritical_q', 'intercritical_r', 'intercritical_r_c',
    'subcritical_q', 'subcritical_r', 'subcritical_r_c',
    'Q_threshold', 'decay_c1', 'decay_rate_w', 'one_d_scattering_ok',
    'max_identity_residual',
]


def table_row(report):
    """Flat row for the exponents table; absent values stay None."""
    ic = report.intercritical_pair or (None, None)
    sc = report.subcritical_triple or (None, None, None)
    return {
        'd': report.d,
        'p': report.p,
        's_c': report.s_c,
        'gamma': report.gamma,
        'regime': report.regime,
        'intercritical_q': ic[0],
        'intercritical_r': ic[1],
        'intercritical_r_c': report.intercritical_r_c,
        'subcritical_q': sc[0],
        'subcritical_r': sc[1],
        'subcritical_r_c': sc[2],
        'Q_threshold': report.Q_threshold,
        'decay_c1': report.decay_c1,
        'decay_rate_w': report.decay_rate_w,
        'one_d_scattering_ok': report.one_d_scattering_ok,
        'max_identity_residual': max(abs(v) for v in identity_residuals(report).values()),
    }


if __name__ == '__main__':
    d, p = int(sys.argv[1]), float(sys.argv[2])
    print(exponent_report(d, p).to_json())
