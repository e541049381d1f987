import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from loglap.bounds import (
    TraceBoundParams,
    asymptotic_bounds,
    count_upper,
    elem_log_bound_check,
    faber_krahn_transfer,
    lambda1_ball_bounds,
    lambda1_lower_general,
    riesz_lower_exact,
    riesz_upper,
    round_half_away,
    trace_coefficients,
    weyl_constants,
)
from loglap.errors import DomainError, PreconditionError
from loglap.specfun import EULER_GAMMA, ball_volume
from table_values import TABLE

mpmath.mp.dps = 30


def _mp_bounds(d):
    """The four bounds evaluated in 30-digit arithmetic."""
    d = mpmath.mpf(d)
    vol = mpmath.pi ** (d / 2) / mpmath.gamma(d / 2 + 1)
    b1 = (2 / d) * mpmath.loggamma(d / 2) + mpmath.log(2) + (2 / d) * mpmath.log(d / 2) - 1 / d
    b2 = None
    if d >= 2:
        b2 = mpmath.log(2 * mpmath.sqrt(d + 2)) - 2 ** (d + 1) * vol**2 * (d + 2) ** (d / 2) / (d * (2 * mpmath.pi) ** (2 * d))
    b3 = mpmath.digamma(d / 4) + mpmath.log(2)
    b4 = mpmath.log(2) + (mpmath.digamma(d / 2) - mpmath.euler) / 2
    return [None if v is None else float(v) for v in (b1, b2, b3, b4)]


def test_riesz_upper_examples():
    assert riesz_upper(2, math.pi, 1.0) == pytest.approx(math.e**2 / 8, rel=1e-14)
    assert riesz_upper(1, 1.0, 0.0) == pytest.approx(1.0 / math.pi, rel=1e-14)
    ratio = riesz_upper(2, math.pi, 0.3 + math.log(2)) / riesz_upper(2, math.pi, 0.3)
    assert ratio == pytest.approx(4.0, rel=1e-13)


def test_count_upper_examples():
    assert count_upper(2, math.pi, 0.0) == pytest.approx(math.e / 4, rel=1e-14)
    assert count_upper(1, 2.0, 0.0) == pytest.approx(2 * math.e / math.pi, rel=1e-14)
    for d in (1, 2, 5):
        for lam in (-1.0, 0.0, 2.5):
            assert count_upper(d, 1.7, lam) == pytest.approx(math.e * d * riesz_upper(d, 1.7, lam), rel=1e-13)


def test_riesz_upper_mpmath():
    for d in (1, 2, 3, 6):
        for lam in (-2.0, 0.0, 1.5, 4.0):
            V = 0.7
            ref = V * mpmath.e ** (d * lam) * mpmath.pi ** (mpmath.mpf(d) / 2) / mpmath.gamma(mpmath.mpf(d) / 2 + 1)
            ref /= (2 * mpmath.pi) ** d * d
            assert riesz_upper(d, V, lam) == pytest.approx(float(ref), rel=1e-13)


@given(
    st.integers(1, 8),
    st.floats(1e-3, 1e3),
    st.floats(-5.0, 5.0),
    st.floats(1e-3, 1.0),
)
@settings(max_examples=200, deadline=None)
def test_upper_bounds_monotone(d, V, lam, step):
    assert riesz_upper(d, V, lam + step) > riesz_upper(d, V, lam)
    assert count_upper(d, V, lam + step) > count_upper(d, V, lam)
    assert riesz_upper(d, V * (1 + step), lam) > riesz_upper(d, V, lam)
    assert count_upper(d, V * (1 + step), lam) > count_upper(d, V, lam)
    assert riesz_upper(d, V, lam) > 0


def test_upper_bounds_reject_volume():
    with pytest.raises(DomainError):
        riesz_upper(2, 0.0, 1.0)
    with pytest.raises(DomainError):
        count_upper(2, -1.0, 1.0)


def test_lambda1_lower_general_examples():
    assert lambda1_lower_general(2, math.pi) == pytest.approx(0.5 * math.log(4 / math.e), abs=1e-14)
    for d in (1, 2, 3, 9):
        threshold = (2 * math.pi) ** d / (math.e * ball_volume(d))
        assert lambda1_lower_general(d, threshold) == pytest.approx(0.0, abs=1e-13)
    assert lambda1_lower_general(1, 2.0) == pytest.approx(math.log(math.pi / (2 * math.e)), abs=1e-14)
    assert round_half_away(lambda1_lower_general(1, 2.0)) == -0.55


def test_b1_is_general_bound_on_ball():
    for d in range(1, 30):
        assert lambda1_lower_general(d, ball_volume(d)) == pytest.approx(lambda1_ball_bounds(d).b1, abs=1e-13)


def test_ball_bounds_mpmath():
    for d in range(1, 21):
        b = lambda1_ball_bounds(d)
        ref = _mp_bounds(d)
        for got, want in zip(b.entries(), ref):
            if want is None:
                assert got is None
            else:
                assert got == pytest.approx(want, abs=1e-12)


def test_ball_bounds_examples():
    assert [round_half_away(x) for x in lambda1_ball_bounds(2).entries()] == [0.19, 1.28, -1.27, 0.12]
    assert [round_half_away(x) for x in lambda1_ball_bounds(3).entries()] == [0.55, 1.48, -0.39, 0.42]
    assert [round_half_away(x) for x in lambda1_ball_bounds(10).entries()] == [1.55, 1.94, 1.40, 1.16]


def test_table_reproduction():
    cells = 0
    for d in range(1, 11):
        b = lambda1_ball_bounds(d)
        for name, got in zip(("b1", "b2", "b3", "b4"), b.entries()):
            want = TABLE[name][d - 1]
            if want is None:
                assert got is None
                continue
            cells += 1
            assert round_half_away(got) == want, (name, d, got)
    # 4 rows of 10 columns minus the undefined b2(1)
    assert cells == 39


def test_best_and_b4():
    from loglap.specfun import constants_for

    for d in range(1, 15):
        b = lambda1_ball_bounds(d)
        assert b.best == max(x for x in b.entries() if x is not None)
        assert b.b4 == constants_for(d).zeta
    assert lambda1_ball_bounds(1).b2 is None
    assert lambda1_ball_bounds(1).best == lambda1_ball_bounds(1).b1


def test_round_half_away():
    assert round_half_away(0.125) == 0.13
    assert round_half_away(-0.125) == -0.13
    assert round_half_away(0.1159) == 0.12
    assert round_half_away(2.675) == 2.68  # repr is 2.675
    assert round_half_away(-3.5349) == -3.53


def test_faber_krahn_transfer_examples():
    b = 0.3
    assert faber_krahn_transfer(2, 1.0, b) == pytest.approx(b + 0.5 * math.log(math.pi), abs=1e-15)
    for d in (1, 2, 5):
        assert faber_krahn_transfer(d, ball_volume(d), b) == pytest.approx(b, abs=1e-15)
    assert faber_krahn_transfer(2, 4 * math.pi, b) == pytest.approx(b - math.log(2), abs=1e-15)


def test_trace_coefficients():
    a, b = trace_coefficients(2, 0.5)
    assert a == pytest.approx(4.0 / 3.0, abs=1e-15)
    assert b == pytest.approx(4.0, abs=1e-15)


def test_trace_params_validation():
    with pytest.raises(DomainError):
        TraceBoundParams(2, 1.0, 1.0, 0.1)
    with pytest.raises(DomainError):
        TraceBoundParams(2, 1.0, 0.0, 0.1)
    with pytest.raises(DomainError):
        TraceBoundParams(2, 0.0, 0.5, 0.1)
    with pytest.raises(DomainError):
        TraceBoundParams(2, 1.0, 0.5, -0.1)


def test_riesz_lower_exact_examples():
    p0 = TraceBoundParams(2, math.pi, 0.5, 0.0)
    pref = math.pi * math.pi / ((2 * math.pi) ** 2 * 2)
    for lam in (0.0, 1.0, 3.0):
        assert riesz_lower_exact(p0, lam) == pytest.approx(riesz_upper(2, math.pi, lam) - pref * (2 * lam + 1), rel=1e-13)
    p = TraceBoundParams(2, math.pi, 0.5, 1.0)
    lam = 2.0
    bracket = math.exp(4) - (4 / 3) * math.exp(1.5 * 2) - 4 * math.exp(2.0) - 5
    assert riesz_lower_exact(p, lam) == pytest.approx(pref * bracket, rel=1e-13)
    assert riesz_lower_exact(p, lam) <= riesz_upper(2, math.pi, 2.0)
    assert riesz_upper(2, math.pi, 2.0) == pytest.approx(math.e**2 / 8 * math.e**2, rel=1e-13)


def test_riesz_lower_exact_errors():
    with pytest.raises(PreconditionError):
        riesz_lower_exact(TraceBoundParams(2, 1.0, 0.5, 1.0), 1.9)
    with pytest.raises(DomainError):
        riesz_lower_exact(TraceBoundParams(1, 1.0, 0.5, 0.0), 1.0)


def test_riesz_lower_not_clamped():
    # just above the threshold the bracket is negative; it is reported as is
    p = TraceBoundParams(2, 1.0, 0.5, 1.0)
    assert riesz_lower_exact(p, 2.0) < 0


@given(
    st.integers(2, 6),
    st.floats(1e-2, 1e2),
    st.floats(0.01, 0.99),
    st.floats(0.0, 5.0),
    st.floats(0.0, 6.0),
)
@settings(max_examples=300, deadline=None)
def test_trace_sandwich_property(d, V, tau, C, extra):
    p = TraceBoundParams(d, V, tau, C)
    lam = 2 * C + extra
    assert riesz_lower_exact(p, lam) <= riesz_upper(d, V, lam)


def test_trace_sandwich_grid():
    for d in (2, 3):
        for C in (0.0, 0.3, 1.7):
            p = TraceBoundParams(d, 2.0, 0.5, C)
            for lam in np.linspace(2 * C, 2 * C + 8, 200):
                assert riesz_lower_exact(p, float(lam)) <= riesz_upper(d, 2.0, float(lam))


def test_weyl_constants_examples():
    r, c = weyl_constants(2, 1.0)
    assert r == pytest.approx(1 / (8 * math.pi), rel=1e-14)
    assert c == pytest.approx(1 / (4 * math.pi), rel=1e-14)
    r, c = weyl_constants(1, 2.0)
    assert r == pytest.approx(2 / math.pi, rel=1e-14)
    assert c == pytest.approx(2 / math.pi, rel=1e-14)
    for d in (1, 2, 4):
        r, c = weyl_constants(d, 3.0)
        assert c == pytest.approx(count_upper(d, 3.0, 0.0) / math.e, rel=1e-14)
        assert c == pytest.approx(d * r, rel=1e-14)


def test_elem_log_bound_examples():
    assert elem_log_bound_check(0.0, 0.7, 0.3)
    for r in (0.1, 1.0, 50.0):
        assert elem_log_bound_check(r, 1.0, 0.4)
    assert elem_log_bound_check(5.0, 0.3, 0.5)
    lhs = math.log1p(5 / 0.3)
    rhs = max(1 / 0.3, 0.3**-0.5) * 6**0.5 * math.log(6)
    assert lhs <= rhs


def test_elem_log_bound_random():
    rng = np.random.default_rng(11)
    r = rng.uniform(0.0, 100.0, 10**4)
    s = np.exp(rng.uniform(math.log(1e-3), math.log(100.0), 10**4))
    tau = rng.uniform(0.0, 1.0, 10**4)
    tau = np.clip(tau, 1e-9, 1 - 1e-9)
    assert all(elem_log_bound_check(float(a), float(b), float(c)) for a, b, c in zip(r, s, tau))


@given(st.floats(0.0, 1e3), st.floats(1e-6, 1e3), st.floats(1e-6, 1 - 1e-6))
@settings(max_examples=500, deadline=None)
def test_elem_log_bound_property(r, s, tau):
    assert elem_log_bound_check(r, s, tau)


def test_elem_log_bound_domain():
    with pytest.raises(DomainError):
        elem_log_bound_check(-1.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        elem_log_bound_check(1.0, 0.0, 0.5)


def test_asymptotic_bounds():
    e1, e2, e3, e4 = asymptotic_bounds(100)
    assert e3 == pytest.approx(math.log(100) - math.log(2), abs=1e-14)
    assert e3 == pytest.approx(3.912, abs=5e-4)
    assert e1 == pytest.approx(math.log(100) - 1, abs=1e-14)
    assert e2 == pytest.approx(0.5 * math.log(102) + math.log(2), abs=1e-14)
    assert e4 == pytest.approx(0.5 * math.log(100) + math.log(2) - EULER_GAMMA / 2, abs=1e-14)


def test_b3_asymptotic_gap_at_100():
    # psi(25) + log 2 - log 50 = psi(25) - log 25 ~ -1/50 - 1/(12*625)
    gap = lambda1_ball_bounds(100).b3 - asymptotic_bounds(100)[2]
    ref = float(mpmath.digamma(25) - mpmath.log(25))
    assert gap == pytest.approx(ref, abs=1e-13)
    assert gap == pytest.approx(-1 / 50 - 1 / 7500, abs=1e-6)
    assert abs(gap) < 0.021


def test_asymptotic_ordering():
    for d in range(60, 400):
        e1, e2, e3, e4 = asymptotic_bounds(d)
        assert e3 > e1 > e2 > e4


def test_asymptotics_track_bounds():
    # the first three expressions are the limits of b1, b2, b3; b4 - expression 4
    # tends to -log(2)/2 rather than 0 (psi(d/2) ~ log d - log 2)
    for d in (2000, 20000):
        b = lambda1_ball_bounds(d)
        e1, e2, e3, e4 = asymptotic_bounds(d)
        assert abs(b.b1 - e1) < 5 * math.log(d) / d
        assert abs(b.b2 - e2) < 1e-12
        assert abs(b.b3 - e3) < 3.0 / d
        assert b.b4 - e4 == pytest.approx(-0.5 * math.log(2), abs=2.0 / d)


def test_best_bound_switch_at_22():
    for d in range(2, 60):
        b = lambda1_ball_bounds(d)
        winner = "b2" if b.best == b.b2 else "b3" if b.best == b.b3 else "other"
        assert winner == ("b2" if d <= 21 else "b3"), d
