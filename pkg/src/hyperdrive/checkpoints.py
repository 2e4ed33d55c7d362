"""Checkpoint minting, maturity processing and zombie reserves.

Positions are backdated to the start of their checkpoint and mature together.
When a maturity checkpoint is minted, every position of the checkpoint that
matures there is closed at face value against the share reserves and the
proceeds move to the zombie reserves, where claimants collect them without
further interest. Interest the zombie shares earn afterwards goes to LPs and
governance.

Zombie share balances are kept rounded up against their base obligations, so
``z_zombie >= x_zombie / c`` holds between collections and collection leaves
``z_zombie == ceil(x_zombie / c)``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import CheckpointError, UnknownReceipt
from .fixedmath import DOWN, ONE, UP, ZERO, FixedDecimal, div, mul, mul_div
from .state import CheckpointRecord, Kind, PoolConfig, PoolState, PositionReceipt, atomic, require_initialized


@dataclass(frozen=True)
class MaturedPayout:
    """Result of redeeming a matured position from the zombie reserves."""

    receipt: PositionReceipt
    base: FixedDecimal
    owed: FixedDecimal
    fee: FixedDecimal
    governance_share: FixedDecimal
    maturity_share_price: FixedDecimal

    @property
    def t_r(self) -> FixedDecimal:
        return ZERO


def latest_checkpoint_time(now: int, cfg: PoolConfig) -> int:
    return now - now % cfg.d_c


def record_boundary_price(s: PoolState, t: int, price: FixedDecimal, cfg: PoolConfig) -> None:
    """Remember the share price at boundary ``t`` so a later mint can use it."""
    if t % cfg.d_c:
        raise CheckpointError(f"{t} is not a checkpoint boundary")
    if t not in s.checkpoints:
        s.checkpoints[t] = CheckpointRecord(share_price=price)


def mint_checkpoint(s: PoolState, cfg: PoolConfig, t_c: int) -> None:
    """Mint ``t_c`` and every earlier recorded boundary still pending. Idempotent."""
    if t_c % cfg.d_c:
        raise CheckpointError(f"{t_c} is not a checkpoint boundary")
    if t_c > s.time:
        raise CheckpointError(f"cannot mint future checkpoint {t_c} at time {s.time}")
    if not s.initialized or t_c <= s.last_minted:
        return
    rec = s.checkpoints.get(t_c)
    if rec is not None and rec.minted:
        return
    start = s.last_minted + cfg.d_c if s.last_minted >= 0 else t_c
    for b in range(start, t_c, cfg.d_c):
        pending = s.checkpoints.get(b)
        if pending is not None and not pending.minted:
            _mint(s, cfg, b, pending.share_price)
    _mint(s, cfg, t_c, rec.share_price if rec is not None else s.c)


def _mint(s: PoolState, cfg: PoolConfig, b: int, price: FixedDecimal) -> None:
    now, c_now = s.time, s.c
    s.time = b
    s.set_share_price(price)
    rec = s.checkpoints.get(b, CheckpointRecord())
    s.checkpoints[b] = replace(rec, share_price=price, minted=True)
    s.last_minted = b

    t = s.maturity_cursor
    while t + cfg.position_duration <= b:
        _mature(s, cfg, t)
        t += cfg.d_c
    s.maturity_cursor = max(s.maturity_cursor, t)

    collect_zombie_interest(s, cfg)
    from .lp import distribute_excess_idle

    distribute_excess_idle(s, cfg)
    s.set_share_price(c_now)
    s.time = now


def _mature(s: PoolState, cfg: PoolConfig, t: int) -> None:
    """Close checkpoint ``t``'s positions at face value into the zombie reserves."""
    rec = s.checkpoints.get(t)
    if rec is None or (rec.longs_outstanding == ZERO and rec.shorts_outstanding == ZERO):
        return
    c = s.c
    m = t + cfg.position_duration
    if m not in s.checkpoints:
        s.checkpoints[m] = CheckpointRecord(share_price=c, minted=True)
    c_m = s.checkpoints[m].share_price
    longs, shorts = rec.longs_outstanding, rec.shorts_outstanding

    # longs: bonds redeemed at face leave the share reserves; shorts: the
    # pool buys its bonds back at face. Both offset in zeta so z_e is unchanged.
    long_shares = div(longs, c, UP)
    short_shares = div(shorts, c, DOWN)
    s.z += short_shares - long_shares
    s.zeta += short_shares - long_shares

    short_interest = mul_div(shorts, c_m, rec.share_price, DOWN) - shorts
    set_aside = longs + short_interest
    s.z_zombie += long_shares + div(short_interest, c, UP)
    s.x_zombie += set_aside
    s.audit.set_aside += set_aside

    s.y_l -= longs
    s.long_maturity_sum -= longs * m
    s.y_s -= shorts
    s.short_maturity_sum -= shorts * m
    s.checkpoints[t] = replace(rec, longs_outstanding=ZERO, shorts_outstanding=ZERO)


def collect_zombie_interest(s: PoolState, cfg: PoolConfig) -> FixedDecimal:
    """Move interest earned by zombie shares to LPs and governance; returns it in base."""
    target = div(s.x_zombie, s.c, UP)
    if s.z_zombie <= target:
        return ZERO
    interest = mul(s.z_zombie, s.c, DOWN) - s.x_zombie
    moved = s.z_zombie - target
    lp_part = mul(moved, ONE - cfg.phi_g_zombie, DOWN)
    gov_part = moved - lp_part
    s.z_zombie = target
    s.z += lp_part
    s.zeta += lp_part
    s.gov_fees += gov_part
    s.audit.interest_lp += mul(lp_part, s.c, DOWN)
    s.audit.interest_gov += mul(gov_part, s.c, DOWN)
    return max(interest, ZERO)


@atomic
def redeem_matured(s: PoolState, cfg: PoolConfig, r: PositionReceipt, now: int | None = None) -> MaturedPayout:
    """Pay a matured position from the zombie reserves.

    The payout is fixed at maturity: longs get face value and shorts the
    variable interest ``(c_m / c_0 - 1) * face``, less the flat fee. Claim
    time does not matter.
    """
    require_initialized(s)
    if now is not None:
        if now < s.time:
            raise CheckpointError("time cannot move backwards")
        s.time = now
    mint_checkpoint(s, cfg, latest_checkpoint_time(s.time, cfg))
    m = r.maturity(cfg)
    if r.checkpoint_time >= s.maturity_cursor:
        raise UnknownReceipt(f"position maturing at {m} has not matured")
    collect_zombie_interest(s, cfg)
    c_m = s.checkpoints[m].share_price
    if r.kind is Kind.LONG:
        owed = r.face
    else:
        owed = mul_div(r.face, c_m, r.open_share_price, DOWN) - r.face
    fee = min(mul(cfg.phi_m, r.face, UP), owed)
    dx = owed - fee
    c = s.c

    s.x_zombie = max(s.x_zombie - owed, ZERO)
    s.z_zombie = max(s.z_zombie - div(owed, c, DOWN), ZERO)
    fee_shares = div(fee, c, DOWN)
    gov = mul(fee_shares, cfg.phi_g, DOWN)
    s.z += fee_shares - gov
    s.zeta += fee_shares - gov
    s.gov_fees += gov
    s.audit.paid += dx
    s.audit.fees += fee
    return MaturedPayout(r, dx, owed, fee, gov, c_m)


def zombie_conservation_gap(s: PoolState) -> FixedDecimal:
    """Inflows minus outflows minus what is still held; zero up to rounding."""
    a = s.audit
    held = mul(s.z_zombie, s.c, DOWN)
    return a.set_aside + a.accrued - a.paid - a.fees - a.interest_lp - a.interest_gov - held


__all__ = [
    "MaturedPayout",
    "collect_zombie_interest",
    "latest_checkpoint_time",
    "mint_checkpoint",
    "record_boundary_price",
    "redeem_matured",
    "zombie_conservation_gap",
]
