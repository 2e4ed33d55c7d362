import random

import pytest

from hyperdrive import checkpoints, trading
from hyperdrive.checkpoints import collect_zombie_interest, latest_checkpoint_time, mint_checkpoint, redeem_matured
from hyperdrive.curve import invariant_k, spot_price
from hyperdrive.engine import Hyperdrive
from hyperdrive.errors import CheckpointError, HyperdriveError, UnknownReceipt
from hyperdrive.fixedmath import ONE, ZERO, fixed
from hyperdrive.state import PoolConfig
from hyperdrive.yield_source import FixedRate

from conftest import DAY, TERM, dec, long_base, make_config, make_pool


def curve_point(s, cfg):
    return s.z_e, spot_price(s.reserves(), cfg.curve(s.mu)), invariant_k(s.reserves(), cfg.curve(s.mu))


def test_latest_checkpoint_time():
    cfg = make_config()
    assert latest_checkpoint_time(86_510, cfg) == 86_400
    assert latest_checkpoint_time(3 * DAY, cfg) == 3 * DAY
    assert latest_checkpoint_time(0, cfg) == 0


def test_mint_is_idempotent():
    cfg = make_config()
    s = make_pool(cfg, 100, 400)
    trading.open_long(s, cfg, fixed(10))
    s.time = 3 * DAY + 5
    mint_checkpoint(s, cfg, 3 * DAY)
    once = s.copy()
    mint_checkpoint(s, cfg, 3 * DAY)
    assert s == once
    with pytest.raises(CheckpointError):
        mint_checkpoint(s, cfg, 3 * DAY + 1)
    with pytest.raises(CheckpointError):
        mint_checkpoint(s, cfg, 4 * DAY)


def test_backdating_shares_maturity_and_price():
    cfg = make_config()
    s = make_pool(cfg, 1000, 4000, time=DAY)
    a = trading.open_long(s, cfg, fixed(10), now=DAY + 100).receipt
    s.set_share_price(fixed("1.01"))
    b = trading.open_long(s, cfg, fixed(10), now=DAY + 50_000).receipt
    assert a.checkpoint_time == b.checkpoint_time == DAY
    assert a.maturity(cfg) == b.maturity(cfg)
    assert a.open_share_price == b.open_share_price == ONE


def test_matured_long_moves_to_zombie():
    cfg = make_config()
    s = make_pool(cfg, 1000, 4000, zeta=500)
    s.checkpoints[0] = s.checkpoints[0].__class__(ONE, fixed(100), ZERO, True)
    s.y_l = fixed(100)
    s.long_maturity_sum = fixed(100) * TERM
    z, zeta, point = s.z, s.zeta, curve_point(s, cfg)
    s.time = TERM
    mint_checkpoint(s, cfg, TERM)
    assert s.z == z - fixed(100) and s.zeta == zeta - fixed(100)
    assert curve_point(s, cfg) == point
    assert (s.z_zombie, s.x_zombie) == (fixed(100), fixed(100))
    assert s.checkpoints[0].longs_outstanding == ZERO and s.y_l == ZERO


def test_matched_zero_interest_positions():
    cfg = make_config()
    s = make_pool(cfg, 1000, 4000, zeta=500)
    s.checkpoints[0] = s.checkpoints[0].__class__(ONE, fixed(70), fixed(70), True)
    s.y_l = s.y_s = fixed(70)
    s.long_maturity_sum = s.short_maturity_sum = fixed(70) * TERM
    point = curve_point(s, cfg)
    s.time = TERM
    mint_checkpoint(s, cfg, TERM)
    assert curve_point(s, cfg) == point
    # the shorts earned nothing, so only the long faces are set aside
    assert (s.z_zombie, s.x_zombie) == (fixed(70), fixed(70))


def test_collect_zombie_interest_example():
    cfg = make_config()
    s = make_pool(cfg, 1000, 4000)
    s.z_zombie = s.x_zombie = fixed(100)
    s.set_share_price(fixed("1.05"))
    z, zeta, z_e = s.z, s.zeta, s.z_e
    assert collect_zombie_interest(s, cfg) == fixed(5)
    moved = fixed(100) - s.z_zombie
    assert abs(float(moved) - 5 / 1.05) <= 1e-17
    assert s.z - z == moved and s.zeta - zeta == moved and s.z_e == z_e
    # c * z_zombie matches x_zombie to within one share unit
    assert fixed(0) <= s.z_zombie - fixed(100).div(fixed("1.05")) <= fixed("0.000000000000000001")
    assert collect_zombie_interest(s, cfg) == ZERO


def test_collect_zombie_interest_governance_cut():
    cfg = make_config(phi_g_zombie="0.25")
    s = make_pool(cfg, 1000, 4000)
    s.z_zombie = s.x_zombie = fixed(100)
    s.set_share_price(fixed("1.05"))
    z = s.z
    collect_zombie_interest(s, cfg)
    gov = s.gov_fees
    assert abs(float(gov) - 0.25 * 5 / 1.05) <= 1e-17
    assert s.z - z + gov == fixed(100) - s.z_zombie
    with pytest.raises(ValueError):
        make_config(phi_g_zombie="1")


def test_redeem_matured_long_ignores_claim_delay():
    cfg = make_config()
    payouts = []
    for delay in (0, 3 * DAY, 2 * TERM):
        e = Hyperdrive(cfg, FixedRate(fixed("0.08")))
        e.initialize("lp", fixed(10_000), fixed("0.95"))
        rid, res = e.open_long("a", fixed(100))
        e.advance_time(TERM + delay)
        payouts.append(e.redeem_matured("a", rid).base)
        assert payouts[-1] == res.bonds
    assert len(set(payouts)) == 1


def test_redeem_matured_short_example():
    cfg = make_config()
    s = make_pool(cfg, 1000, 4000)
    r = trading.open_short(s, cfg, fixed(50)).receipt
    s.time = TERM
    s.set_share_price(fixed("1.2"))
    mint_checkpoint(s, cfg, TERM)
    s.time = TERM + 10 * DAY
    s.set_share_price(fixed("1.5"))
    paid = redeem_matured(s, cfg, r)
    assert paid.base == fixed(10)


def test_double_claim_rejected():
    cfg = make_config()
    e = Hyperdrive(cfg, FixedRate(fixed("0.05")))
    e.initialize("lp", fixed(10_000), fixed("0.95"))
    rid, _ = e.open_short("a", fixed(50))
    e.advance_time(TERM + DAY)
    e.redeem_matured("a", rid)
    before = e.state.copy()
    with pytest.raises(UnknownReceipt):
        e.redeem_matured("a", rid)
    assert e.state == before


def test_redeem_before_maturity_rejected():
    cfg = make_config()
    s = make_pool(cfg, 1000, 4000)
    r = trading.open_long(s, cfg, fixed(10)).receipt
    s.time = TERM - 1
    with pytest.raises(UnknownReceipt):
        redeem_matured(s, cfg, r)


def test_flat_fee_charged_at_redemption():
    cfg = make_config(phi_m="0.01")
    s = make_pool(cfg, 1000, 4000)
    r = trading.open_short(s, cfg, fixed(100)).receipt
    s.time = TERM
    s.set_share_price(fixed("1.001"))
    # the fee would exceed the interest owed, so it is clamped to it
    assert redeem_matured(s, cfg, r).base == ZERO


def _run(eager: bool, seed: int):
    rng = random.Random(seed)
    cfg = PoolConfig(position_duration=10 * DAY, d_c=DAY, sigma="0.4", phi_n="0.05", phi_m="0.002")
    e = Hyperdrive(cfg, FixedRate(fixed("0.07")), eager_checkpoints=eager)
    e.initialize("lp", fixed(50_000), fixed("0.93"))
    for _ in range(60):
        u = rng.random()
        try:
            if u < 0.35:
                e.open_long("a", long_base(rng, e.state, cfg, 0.001, 0.05))
            elif u < 0.7:
                e.open_short("b", dec(float(e.state.y) * rng.uniform(1e-4, 0.02)))
            else:
                e.advance_time(rng.randint(1, 4 * DAY))
        except HyperdriveError:
            pass
    e.advance_time(3 * DAY)
    e.mint_checkpoint()
    return e.state


def test_lazy_and_eager_minting_agree():
    for seed in range(3):
        assert _run(True, seed) == _run(False, seed)


def test_zombie_conservation_over_scenario():
    cfg = PoolConfig(position_duration=5 * DAY, d_c=DAY, sigma="0.5", phi_m="0.001", phi_g="0.1", phi_g_zombie="0.2")
    e = Hyperdrive(cfg, FixedRate(fixed("0.1")))
    e.initialize("lp", fixed(100_000), fixed("0.95"))
    rng = random.Random(4)
    ids = []
    for _ in range(30):
        ids.append(e.open_long("a", fixed(rng.randint(10, 500)))[0])
        ids.append(e.open_short("b", fixed(rng.randint(10, 500)))[0])
        e.advance_time(rng.randint(1, 2 * DAY))
    e.advance_time(6 * DAY)
    for rid in ids[::2]:
        actor = e.receipts[rid][0]
        e.redeem_matured(actor, rid)
    gap = checkpoints.zombie_conservation_gap(e.state)
    assert abs(float(gap)) <= 1e-9 * float(e.state.audit.set_aside)
