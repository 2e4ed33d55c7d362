from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperdrive.fixedmath import (
    DOWN,
    ONE,
    SCALE,
    UP,
    ULP,
    ZERO,
    DomainError,
    FixedDecimal,
    FixedPointOverflow,
    div,
    exp,
    fixed,
    ln,
    mul,
    mul_div,
    pow,
)

# pow(2, 0.8) at 50 digits: 1.7411011265922482782725400349...
POW_2_08 = "1.741101126592248278"

raws = st.integers(min_value=-(10**30), max_value=10**30)
positive_raws = st.integers(min_value=1, max_value=10**30)


def exact(x: FixedDecimal) -> Fraction:
    return Fraction(x.raw, SCALE)


def test_mul_examples():
    assert mul(fixed(2), fixed(3)) == fixed(6)
    x = fixed("123.456789012345678901")
    assert mul(ONE, x) == x
    half = fixed("0.5")
    assert mul(ULP, half, DOWN) == ZERO
    assert mul(ULP, half, UP) == ULP


def test_div_examples():
    assert div(fixed(6), fixed(3)) == fixed(2)
    x = fixed("-7.25")
    assert div(x, ONE) == x
    assert str(div(ONE, fixed(3), DOWN)) == "0.333333333333333333"
    assert str(div(ONE, fixed(3), UP)) == "0.333333333333333334"
    with pytest.raises(ZeroDivisionError):
        div(ONE, ZERO)


def test_pow_examples():
    assert abs(float(pow(fixed(4), fixed("0.5"))) - 2) <= 1e-12
    x = fixed("3.7")
    assert pow(x, ZERO) == ONE
    assert pow(x, ONE) == x
    with mpmath.workdps(50):
        ref = mpmath.power(2, mpmath.mpf("0.8"))
    got = pow(fixed(2), fixed("0.8"))
    assert abs(mpmath.mpf(got.raw) / SCALE - ref) / ref <= 1e-12
    assert str(got) == POW_2_08
    with pytest.raises(DomainError):
        pow(ZERO, fixed("0.5"))
    with pytest.raises(DomainError):
        ln(fixed(-1))


def test_string_format():
    assert str(fixed("1.05")) == "1.050000000000000000"
    assert str(fixed("-0.000000000000000001")) == "-0.000000000000000001"
    for bad in ("1e5", "1.0000000000000000001", "", "abc", "--1"):
        with pytest.raises(ValueError):
            FixedDecimal(bad)


def test_overflow_is_fatal():
    big = FixedDecimal.from_raw(2**254)
    with pytest.raises(FixedPointOverflow):
        big + big
    with pytest.raises(FixedPointOverflow):
        mul(big, fixed(4))


def test_immutable():
    with pytest.raises(AttributeError):
        ONE.raw = 5


@given(raws)
def test_string_round_trip(r):
    x = FixedDecimal.from_raw(r)
    assert FixedDecimal(str(x)) == x


@given(raws, raws)
def test_mul_brackets_exact(a, b):
    x, y = FixedDecimal.from_raw(a), FixedDecimal.from_raw(b)
    lo, hi = mul(x, y, DOWN), mul(x, y, UP)
    true = exact(x) * exact(y)
    assert exact(lo) <= true <= exact(hi)
    assert hi.raw - lo.raw <= 1
    assert true - exact(lo) < Fraction(1, SCALE)


@given(raws, raws.filter(lambda r: r != 0))
def test_div_brackets_exact(a, b):
    x, y = FixedDecimal.from_raw(a), FixedDecimal.from_raw(b)
    lo, hi = div(x, y, DOWN), div(x, y, UP)
    true = exact(x) / exact(y)
    assert exact(lo) <= true <= exact(hi)
    assert hi.raw - lo.raw <= 1


@given(raws, raws, positive_raws)
def test_mul_div_single_rounding(a, b, c):
    x, y, z = (FixedDecimal.from_raw(v) for v in (a, b, c))
    true = exact(x) * exact(y) / exact(z)
    lo, hi = mul_div(x, y, z, DOWN), mul_div(x, y, z, UP)
    assert exact(lo) <= true <= exact(hi)
    assert hi.raw - lo.raw <= 1


@given(raws, raws)
def test_add_sub_exact(a, b):
    x, y = FixedDecimal.from_raw(a), FixedDecimal.from_raw(b)
    assert exact(x + y) == exact(x) + exact(y)
    assert exact(x - y) == exact(x) - exact(y)


@settings(max_examples=200)
@given(
    st.integers(min_value=10**12, max_value=10**24),
    st.integers(min_value=-3 * SCALE, max_value=3 * SCALE),
)
def test_pow_matches_reference(b, e):
    base, exponent = FixedDecimal.from_raw(b), FixedDecimal.from_raw(e)
    with mpmath.workdps(40):
        ref = mpmath.power(mpmath.mpf(b) / SCALE, mpmath.mpf(e) / SCALE)
        got = mpmath.mpf(pow(base, exponent, UP).raw) / SCALE
        if ref > 1e-6:  # below that the 18-digit grid dominates
            assert abs(got - ref) / ref <= 1e-12


def test_pow_monotone_in_base():
    for e in ("0.1", "0.5", "0.8", "1.7"):
        prev = ZERO
        for i in range(1, 200):
            cur = pow(fixed(f"{i * 0.37:.2f}"), fixed(e))
            assert cur > prev
            prev = cur


@given(st.integers(min_value=-10 * SCALE, max_value=10 * SCALE))
def test_exp_ln_round_trip(r):
    x = FixedDecimal.from_raw(r)
    back = ln(exp(x))
    assert abs(float(back - x)) <= 1e-12 * max(1.0, abs(float(x)))
