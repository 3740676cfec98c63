import json
import math

import hypothesis
from hypothesis import strategies
import pytest

import exponents
from exponents import admissible, exponent_report


dims = strategies.sampled_from([1, 2, 3])
powers = strategies.floats(min_value=0.1, max_value=12.0, allow_nan=False)


def test_golden_values():
    assert exponent_report(1, 4).s_c == 0
    assert exponent_report(3, 4).s_c == 1
    assert math.isclose(exponent_report(1, 3).gamma, 1 / 6, abs_tol=1e-15)
    assert math.isclose(exponents.P0, 5.2360679775, rel_tol=1e-10)
    assert math.isclose(exponent_report(1, 10).Q_threshold, 10 / 3, rel_tol=1e-15)
    assert exponent_report(1, 6).decay_c1 == 0.5
    assert exponent_report(1, 6).decay_rate_w == -0.125
    assert math.isclose(exponent_report(1, 6).Q_threshold, 12.0)


def test_classify():
    assert exponents.classify(1, 2) == exponents.LONG_RANGE
    assert exponents.classify(2, 1) == exponents.LONG_RANGE
    assert exponents.classify(1, 3) == exponents.MASS_SUBCRITICAL
    assert exponents.classify(1, 4) == exponents.MASS_CRITICAL
    assert exponents.classify(2, 2) == exponents.MASS_CRITICAL
    assert exponents.classify(1, 6) == exponents.INTERCRITICAL
    assert exponents.classify(3, 4) == exponents.ENERGY_CRITICAL
    assert exponents.classify(3, 5) == exponents.SUPERCRITICAL
    # boundaries snap
    assert exponents.classify(1, 4 + 1e-14) == exponents.MASS_CRITICAL


def test_pairs_for_known_powers():
    assert exponents.intercritical_pair(1, 6) == (8, 4, 12)
    q, r, r_c = exponents.subcritical_triple(1, 3)
    assert (q, r, r_c) == (10, pytest.approx(10 / 3), 7.5)
    assert exponents.subcritical_triple(1, 2) is None
    assert exponents.subcritical_triple(1, 4) is None
    assert exponents.intercritical_pair(1, 3) is None


def test_regime_boundaries_are_none_not_zero():
    report = exponent_report(1, 3)
    assert report.Q_threshold is None
    assert report.decay_c1 is None
    assert report.intercritical_pair is None
    assert exponent_report(1, 4).r_c_note == exponents.MASS_CRITICAL_R_C_NOTE
    assert exponent_report(1, 6).r_c_note is None


def test_one_d_scattering_flag():
    assert exponent_report(1, 6).one_d_scattering_ok is True
    assert exponent_report(1, 5).one_d_scattering_ok is False
    assert exponent_report(2, 3).one_d_scattering_ok is None


def test_strauss_exponent():
    assert math.isclose(exponents.strauss_exponent(1), (1 + math.sqrt(17)) / 2)
    assert math.isclose(exponents.strauss_exponent(3), 1.0)
    assert exponents.strauss_exponent(3) < exponents.strauss_exponent(1)


def test_admissible():
    assert admissible(math.inf, 2, 1)
    assert admissible(4, math.inf, 1)
    assert admissible(8, 4, 1)
    assert not admissible(2, math.inf, 2)
    assert admissible(2, 6, 3)
    assert not admissible(1, 2, 1)
    assert not admissible(4, 4, 1)


def test_critical_pair():
    pair = exponents.critical_pair(1, 10, 12)
    assert pair.q == pytest.approx(12)
    assert pair.r == pytest.approx(3)
    assert pair.r_c == pytest.approx(30)
    assert exponents.default_critical_pair(1, 10) == pair
    with pytest.raises(ValueError):
        exponents.critical_pair(1, 10, 5)
    with pytest.raises(ValueError):
        exponents.critical_pair(1, 3, 20)


def test_default_critical_pair_missing_in_one_dimension():
    # q = 2/(1 - p/q_c) < 4 leaves no admissible companion in d = 1.
    assert exponents.default_critical_pair(1, 6) is None
    assert 'critical_line' not in exponents.identity_residuals(exponent_report(1, 6))


def test_one_d_pair():
    assert exponents.one_d_pair(6) == (12, 6)


def test_report_validation():
    with pytest.raises(ValueError):
        exponent_report(0, 2)
    with pytest.raises(ValueError):
        exponent_report(1.5, 2)
    with pytest.raises(ValueError):
        exponent_report(1, 0)


def test_report_json():
    data = json.loads(exponent_report(2, 3).to_json())
    assert data['d'] == 2
    assert data['regime'] == exponents.INTERCRITICAL
    assert data['intercritical_pair'] == [5, pytest.approx(10 / 3)]


def test_table_row_has_every_column():
    row = exponents.table_row(exponent_report(1, 6))
    assert set(row) == set(exponents.TABLE_COLUMNS)
    assert row['intercritical_q'] == 8
    assert row['subcritical_q'] is None
    assert row['max_identity_residual'] <= 1e-12


@hypothesis.given(dims, powers)
def test_scaling_identities_hold(d, p):
    residuals = exponents.identity_residuals(exponent_report(d, p))
    assert max(abs(v) for v in residuals.values()) <= 1e-12


@hypothesis.given(dims, powers)
def test_emitted_pairs_are_admissible(d, p):
    for q, r in exponents.emitted_pairs(exponent_report(d, p)):
        assert admissible(q, r, d)


@hypothesis.given(dims, powers)
def test_s_c_and_gamma_are_opposite(d, p):
    report = exponent_report(d, p)
    assert math.isclose(report.s_c, -report.gamma, abs_tol=1e-15)


@pytest.mark.parametrize('d', [1, 2])
def test_threshold_branches_meet_at_eight_over_d(d):
    below, above = 8 / d - 1e-9, 8 / d + 1e-9
    for f in (exponents.q_threshold, exponents.decay_c1, exponents.decay_rate_w):
        assert f(d, below) == pytest.approx(f(d, above), abs=1e-7)


@hypothesis.given(strategies.floats(min_value=4.5, max_value=12.0))
def test_one_d_decay_rates_in_range(p):
    assert 0 <= exponents.decay_c1(1, p) <= 2 - 4.5 / 4
    assert exponents.decay_rate_w(1, p) < 0


@hypothesis.given(dims, powers, powers)
def test_s_c_increases_with_p(d, p, q):
    hypothesis.assume(q - p > 1e-6)
    low, high = exponent_report(d, p), exponent_report(d, q)
    assert low.s_c < high.s_c
    assert low.gamma > high.gamma
