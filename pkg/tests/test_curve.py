import random

import mpmath
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hyperdrive.curve import (
    CurveParams,
    CurveReserves,
    Direction,
    h_trade,
    i_bonds_out_given_shares_in,
    i_shares_in_given_bonds_out,
    i_shares_out_given_bonds_in,
    invariant_k,
    m_price,
    max_buy,
    max_sell,
    spot_price,
)
from hyperdrive.errors import CurveDomainError, InsufficientLiquidity
from hyperdrive.fixedmath import ONE, ZERO, FixedDecimal, fixed
from hyperdrive.simcli.oracles import OracleCurve

from conftest import dec, rel

P = CurveParams(fixed("0.5"), ONE)
R = CurveReserves(fixed(100), fixed(400), ONE)


def oracle(r: CurveReserves, p: CurveParams) -> OracleCurve:
    m = lambda x: mpmath.mpf(x.raw) / 10**18
    return OracleCurve(m(r.z_e), m(r.y), m(r.c), m(p.mu), m(p.sigma))


def test_invariant_examples():
    assert invariant_k(R, P) == fixed(30)
    for sigma in ("0.1", "0.5", "0.9"):
        assert invariant_k(CurveReserves(ONE, ONE, ONE), CurveParams(fixed(sigma), ONE)) == fixed(2)
    assert invariant_k(CurveReserves(fixed(100), fixed(400), fixed("1.1")), P) == fixed(31)


def test_spot_price_examples():
    assert spot_price(R, P) == fixed("0.5")
    assert spot_price(CurveReserves(fixed(20), fixed(320), ONE), P) == fixed("0.25")
    assert spot_price(CurveReserves(fixed(7), fixed(14), ONE), CurveParams(fixed("0.3"), fixed(2))) == ONE


def test_directional_examples():
    assert i_shares_in_given_bonds_out(fixed(39), R, P) == fixed(21)
    assert i_shares_in_given_bonds_out(ZERO, R, P) == ZERO
    assert i_shares_in_given_bonds_out(fixed(175), R, P) == fixed(125)
    assert i_shares_out_given_bonds_in(fixed(41), R, P) == fixed(19)
    assert i_shares_out_given_bonds_in(ZERO, R, P) == ZERO
    assert i_bonds_out_given_shares_in(fixed(21), R, P) == fixed(39)
    with pytest.raises(InsufficientLiquidity):
        i_shares_in_given_bonds_out(fixed(176), R, P)
    with pytest.raises(ValueError):
        i_shares_in_given_bonds_out(fixed(-1), R, P)


def test_directional_examples_against_oracle():
    assert float(oracle(R, P).buy_bonds(mpmath.mpf(39))) == pytest.approx(21, rel=1e-20)
    assert float(oracle(R, P).sell_bonds(mpmath.mpf(41))) == pytest.approx(19, rel=1e-20)
    assert float(oracle(R, P).max_buy()) == pytest.approx(175, rel=1e-20)


def test_sell_round_trip():
    bought = fixed(39)
    paid = i_shares_in_given_bonds_out(bought, R, P)
    after = CurveReserves(R.z_e + paid, R.y - bought, R.c)
    back = i_shares_out_given_bonds_in(bought, after, P)
    assert abs((back - paid).raw) <= 2


def test_m_price_examples():
    assert m_price(fixed(10), fixed(2)) == fixed(5)
    assert m_price(ZERO, fixed(2)) == ZERO
    assert m_price(fixed(100), ONE) == fixed(100)
    with pytest.raises(CurveDomainError):
        m_price(ONE, ZERO)


def test_h_trade_examples():
    dy = fixed(39)
    assert h_trade(dy, ONE, Direction.BONDS_OUT, R, P) == i_shares_in_given_bonds_out(dy, R, P)
    c2 = CurveReserves(R.z_e, R.y, fixed(2))
    assert h_trade(fixed(10), ZERO, Direction.BONDS_IN, c2, P) == m_price(fixed(10), fixed(2))
    assert h_trade(fixed(82), fixed("0.5"), Direction.BONDS_IN, R, P) == fixed(60)
    with pytest.raises(ValueError):
        h_trade(dy, fixed("1.5"), Direction.BONDS_IN, R, P)


def test_max_trade_examples():
    assert max_buy(R, P) == (fixed(175), fixed(125))
    assert max_buy(CurveReserves(fixed(50), fixed(50), ONE), P) == (ZERO, ZERO)
    assert max_sell(R, P, fixed(81)) == (fixed(41), fixed(19))
    assert max_sell(R, P, R.z_e) == (ZERO, ZERO)


def test_reserves_validated():
    with pytest.raises(CurveDomainError):
        CurveReserves(ZERO, ONE, ONE)
    with pytest.raises(ValueError):
        CurveParams(ONE, ONE)
    with pytest.raises(ValueError):
        CurveParams(fixed("0.5"), ZERO)


# -- properties ------------------------------------------------------------------


@st.composite
def curves(draw):
    sigma = draw(st.floats(0.05, 0.95))
    z_e = 10 ** draw(st.floats(0, 7))
    p = draw(st.floats(0.3, 0.999))
    mu = draw(st.floats(0.5, 2))
    c = mu * draw(st.floats(1, 2))
    y = mu * z_e / p ** (1 / sigma)
    return CurveReserves(dec(z_e), dec(y), dec(c)), CurveParams(dec(sigma, 6), dec(mu))


@settings(max_examples=150, deadline=None)
@given(curves(), st.floats(1e-6, 0.99))
def test_buy_preserves_depth(curve, frac):
    r, p = curve
    cap, _ = max_buy(r, p)
    dy = dec(float(cap) * frac)
    assume(dy > ZERO)
    dz = i_shares_in_given_bonds_out(dy, r, p)
    after = CurveReserves(r.z_e + dz, r.y - dy, r.c)
    assert rel(invariant_k(after, p), invariant_k(r, p)) <= 1e-9


@settings(max_examples=150, deadline=None)
@given(curves(), st.floats(1e-6, 0.99))
def test_sell_preserves_depth_and_brackets_price(curve, frac):
    r, p = curve
    dy = dec(float(max_sell(r, p, ZERO)[0]) * frac)
    assume(dy > ZERO)
    dz = i_shares_out_given_bonds_in(dy, r, p)
    # near z_e = 0 the grid spacing alone moves k; real pools keep z_min above that
    assume(float(r.z_e - dz) > float(r.z_e) * 1e-6)
    after = CurveReserves(r.z_e - dz, r.y + dy, r.c)
    assert rel(invariant_k(after, p), invariant_k(r, p)) <= 1e-9
    # average price in base per bond never beats the pre-trade spot price
    assert float(dz) * float(r.c) / float(dy) <= float(spot_price(r, p)) * (1 + 1e-12)


@settings(max_examples=150, deadline=None)
@given(curves(), st.floats(1e-6, 0.99))
def test_buy_price_at_least_spot(curve, frac):
    r, p = curve
    cap, _ = max_buy(r, p)
    dy = dec(float(cap) * frac)
    assume(dy > ZERO)
    dz = i_shares_in_given_bonds_out(dy, r, p)
    assert float(dz) * float(r.c) / float(dy) >= float(spot_price(r, p)) * (1 - 1e-12)


@settings(max_examples=50, deadline=None)
@given(curves())
def test_buy_cost_increasing_and_convex(curve):
    r, p = curve
    cap, _ = max_buy(r, p)
    step = float(cap) / 21
    assume(step > 1e-6)
    costs = [float(i_shares_in_given_bonds_out(dec(step * i), r, p)) for i in range(21)]
    diffs = [b - a for a, b in zip(costs, costs[1:])]
    assert all(d > 0 for d in diffs)
    tol = 1e-9 * max(costs)
    assert all(b >= a - tol for a, b in zip(diffs, diffs[1:]))


@settings(max_examples=40, deadline=None)
@given(curves(), st.floats(0.01, 0.9), st.booleans())
def test_solves_match_bisection_oracle(curve, frac, buy):
    r, p = curve
    o = oracle(r, p)
    if buy:
        dy = dec(float(max_buy(r, p)[0]) * frac)
        assume(dy > ZERO)
        got, want = i_shares_in_given_bonds_out(dy, r, p), o.buy_bonds(mpmath.mpf(dy.raw) / 10**18)
    else:
        dy = dec(float(max_sell(r, p, ZERO)[0]) * frac)
        assume(dy > ZERO)
        got, want = i_shares_out_given_bonds_in(dy, r, p), o.sell_bonds(mpmath.mpf(dy.raw) / 10**18)
    assert abs(mpmath.mpf(got.raw) / 10**18 - want) <= 2e-18 + 1e-15 * want


def test_split_trades_sum_to_single():
    rng = random.Random(3)
    for _ in range(50):
        sigma = dec(rng.uniform(0.1, 0.9), 4)
        p = CurveParams(sigma, ONE)
        z_e = 10 ** rng.uniform(2, 5)
        r = CurveReserves(dec(z_e), dec(z_e / 0.9 ** (1 / float(sigma))), ONE)
        total = dec(float(r.y) * rng.uniform(0.01, 0.5))
        whole = i_shares_out_given_bonds_in(total, r, p)
        parts = ZERO
        cur = r
        n = rng.randint(2, 16)
        chunk = FixedDecimal.from_raw(total.raw // n)
        for i in range(n):
            dy = chunk if i < n - 1 else total - chunk * n + chunk
            dz = i_shares_out_given_bonds_in(dy, cur, p)
            parts += dz
            cur = CurveReserves(cur.z_e - dz, cur.y + dy, cur.c)
        assert rel(parts, whole) <= 1e-9
