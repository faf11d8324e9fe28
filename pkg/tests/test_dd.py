import math
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modcorr.dd import Real2, dd_div, dd_exp, dd_frac, dd_log, dd_mul, dd_sqrt, two_prod, two_sum

finite = st.floats(min_value=-1e150, max_value=1e150, allow_nan=False, allow_infinity=False)
positive = st.floats(min_value=1e-3, max_value=1e12)


def exact(h, l):
    return Fraction(h) + Fraction(l)


@given(finite, finite)
def test_two_sum_is_error_free(a, b):
    s, e = two_sum(a, b)
    assert exact(s, e) == Fraction(a) + Fraction(b)


# Dekker splitting assumes no underflow: keep magnitudes in the normal range
normal = st.one_of(st.just(0.0), st.floats(min_value=1e-100, max_value=1e100), st.floats(min_value=-1e100, max_value=-1e-100))


@given(normal, normal)
def test_two_prod_is_error_free(a, b):
    p, e = two_prod(a, b)
    assert exact(p, e) == Fraction(a) * Fraction(b)


@given(positive)
def test_sqrt_relative_error(x):
    h, l = dd_sqrt(x, 0.0)
    with mp.workdps(50):
        ref = mp.sqrt(mp.mpf(x))
        assert abs((mp.mpf(h) + mp.mpf(l)) / ref - 1) < 2.0**-100


@pytest.mark.parametrize("x", [-30.5, -1.0, 1e-9, 0.5, 1.0, 3.7, 41.4])
def test_exp_against_mpmath(x):
    h, l = dd_exp(x, 0.0)
    with mp.workdps(50):
        ref = mp.exp(mp.mpf(x))
        assert abs((mp.mpf(h) + mp.mpf(l)) / ref - 1) < 2.0**-98


@pytest.mark.parametrize("x", [1.5, 2.0, 1234.0, 1e9, 0.01])
def test_log_against_mpmath(x):
    h, l = dd_log(x, 0.0)
    with mp.workdps(50):
        ref = mp.log(mp.mpf(x))
        assert abs(mp.mpf(h) + mp.mpf(l) - ref) < 2.0**-100 * max(1.0, abs(float(ref)))


def test_mul_and_div_roundtrip():
    a = Real2.from_string("1.41421356237309504880168872420969807856967187538")
    b = Real2.from_string("3.14159265358979323846264338327950288419716939937")
    ph, pl = dd_mul(a.hi, a.lo, b.hi, b.lo)
    qh, ql = dd_div(ph, pl, b.hi, b.lo)
    assert abs(exact(qh, ql) - a.as_fraction()) < Fraction(1, 2**104)


@given(st.floats(min_value=-1e6, max_value=1e6), st.floats(min_value=-1e-10, max_value=1e-10))
def test_frac_in_unit_interval(h, l):
    s, e = dd_frac(h, l)
    assert 0.0 <= s < 1.0
    total = exact(s, e)
    want = (Fraction(h) + Fraction(l)) % 1
    d = abs(total - want)
    assert min(d, 1 - d) < Fraction(1, 2**100)


@given(st.floats(min_value=1e15, max_value=1e30), st.floats(min_value=0.0, max_value=1.0))
def test_frac_with_large_low_part(h, t):
    # |lo| may exceed 1 once hi passes 2**53
    h = float(h)
    l = t * (math.ulp(h) / 2)
    s, e = dd_frac(h, l)
    want = (Fraction(h) + Fraction(l)) % 1
    d = abs(exact(s, e) - want)
    assert min(d, 1 - d) < Fraction(1, 2**100)


def test_frac_of_tiny_negative_wraps_below_one():
    s, e = dd_frac(3.0, -1e-30)
    assert s == 1.0 or s < 1.0
    assert 0.0 <= s < 1.0


def test_real2_from_string_is_nearest_pair():
    r = Real2.from_string("0.1")
    assert abs(r.as_fraction() - Fraction(1, 10)) < Fraction(1, 10**32)


def test_real2_arithmetic():
    a = Real2(1.0, 1e-20)
    assert (a + 1).hi == 2.0
    assert (a * 2).lo == pytest.approx(2e-20)
    assert (-a).hi == -1.0
    assert float(a - a) == 0.0
