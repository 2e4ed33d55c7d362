"""Opening and closing longs and shorts.

Each operation evaluates its pricing formula at 192-bit precision and rounds
once per stored quantity: amounts the trader receives round down, amounts the
trader pays round up, and reserve and governance deltas round toward the
pool. Fees are denominated in base and enter share-denominated balances
divided by ``c``.

Every mutating function takes ``(state, cfg, ...)``, mints the current
checkpoint if needed and is atomic: on any error the state is left exactly as
it was.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .curve import RealCurve
from .errors import CheckpointError, InvalidInput, NegativeProceeds, UnknownReceipt
from .fixedmath import DOWN, ONE, SCALE, UP, ZERO, FixedDecimal, from_real, high_precision
from .state import CheckpointRecord, Kind, PoolConfig, PoolState, PositionReceipt, atomic, require_initialized


@dataclass(frozen=True)
class FeeBreakdown:
    """Fees of one trade in base; ``governance_share`` is in shares."""

    curve_fee: FixedDecimal = ZERO
    flat_fee: FixedDecimal = ZERO
    governance_share: FixedDecimal = ZERO

    @property
    def total(self) -> FixedDecimal:
        return self.curve_fee + self.flat_fee


@dataclass(frozen=True)
class TradeResult:
    receipt: PositionReceipt
    base: FixedDecimal  # deposit for opens, proceeds for closes
    bonds: FixedDecimal
    curve_shares: FixedDecimal
    fees: FeeBreakdown
    spot_price: FixedDecimal
    t_r: FixedDecimal


def _check_fraction(t_r: FixedDecimal) -> None:
    if not ZERO <= t_r <= ONE:
        raise InvalidInput(f"time remaining must lie in [0, 1], got {t_r}")


@high_precision
def fee_new(dy: FixedDecimal, t_r: FixedDecimal, p: FixedDecimal, cfg: PoolConfig) -> FixedDecimal:
    """Curve fee ``phi_n * (1 - p) * dy * t_r``, rounded up."""
    _check_fraction(t_r)
    if not ZERO < p <= ONE:
        raise InvalidInput(f"spot price must lie in (0, 1], got {p}")
    return from_real(cfg.phi_n.real * (1 - p.real) * dy.real * t_r.real, UP)


@high_precision
def fee_mature(dy: FixedDecimal, t_r: FixedDecimal, cfg: PoolConfig) -> FixedDecimal:
    """Flat fee ``phi_m * dy * (1 - t_r)``, rounded up."""
    _check_fraction(t_r)
    return from_real(cfg.phi_m.real * dy.real * (1 - t_r.real), UP)


# -- helpers ---------------------------------------------------------------------


def _curve(s: PoolState, cfg: PoolConfig) -> RealCurve:
    return RealCurve(s.z_e.real, s.y.real, s.c.real, s.mu.real, cfg.sigma.real)


def _sync(s: PoolState, cfg: PoolConfig, now: int | None) -> int:
    require_initialized(s)
    if now is not None:
        if now < s.time:
            raise InvalidInput(f"time cannot move backwards ({now} < {s.time})")
        s.time = now
    from .checkpoints import latest_checkpoint_time, mint_checkpoint

    t_c = latest_checkpoint_time(s.time, cfg)
    mint_checkpoint(s, cfg, t_c)
    return t_c


def _adjust_checkpoint(s: PoolState, t: int, longs: FixedDecimal = ZERO, shorts: FixedDecimal = ZERO) -> None:
    rec = s.checkpoints.get(t)
    if rec is None:
        raise CheckpointError(f"no checkpoint at {t}")
    s.checkpoints[t] = replace(
        rec,
        longs_outstanding=rec.longs_outstanding + longs,
        shorts_outstanding=rec.shorts_outstanding + shorts,
    )


def _split(r: PositionReceipt, cfg: PoolConfig, now: int) -> tuple[int, FixedDecimal, FixedDecimal]:
    """(seconds remaining, new-bond face, matured face) of a receipt at ``now``."""
    remaining = min(max(r.maturity(cfg) - now, 0), cfg.position_duration)
    new = FixedDecimal.from_raw(r.face.raw * remaining // cfg.position_duration)
    return remaining, new, r.face - new


def _fraction(remaining: int, cfg: PoolConfig) -> FixedDecimal:
    return FixedDecimal.from_raw(remaining * SCALE // cfg.position_duration)


def _validate(s: PoolState, r: PositionReceipt, kind: Kind) -> None:
    if r.kind is not kind:
        raise InvalidInput(f"expected a {kind.value} receipt")
    rec = s.checkpoints.get(r.checkpoint_time)
    if rec is None or r.face <= ZERO:
        raise UnknownReceipt(f"no open position for receipt {r}")
    if _is_settled(s, r):
        return
    outstanding = rec.longs_outstanding if kind is Kind.LONG else rec.shorts_outstanding
    if outstanding < r.face:
        raise UnknownReceipt(f"receipt exceeds the checkpoint's outstanding {kind.value}s")


def _is_settled(s: PoolState, r: PositionReceipt) -> bool:
    """True once the receipt's checkpoint matured and moved to the zombie reserves."""
    return r.checkpoint_time < s.maturity_cursor


# -- longs -----------------------------------------------------------------------


@atomic
@high_precision
def open_long(s: PoolState, cfg: PoolConfig, dx: FixedDecimal, now: int | None = None) -> TradeResult:
    """Buy bonds with up to ``dx`` base. The receipt is backdated to the latest checkpoint.

    Base below one share unit is not taken: the trader is charged
    ``c * floor(dx / c)`` rounded up, which is at most ``dx``.
    """
    if dx <= ZERO:
        raise InvalidInput("open_long needs a positive base amount")
    t_c = _sync(s, cfg, now)
    c = s.c
    curve = _curve(s, cfg)
    p = curve.spot_price()
    dz = dx.div(c, DOWN)
    if dz <= ZERO:
        raise InvalidInput("base amount is below one share unit")
    # charge only the base that converts into whole share units
    dx = dz.mul(c, UP)
    bonds = curve.bonds_out_for_shares_in(dz.real)
    fee_bonds = cfg.phi_n.real * (1 / p - 1) * dx.real
    dy = from_real(bonds - fee_bonds, DOWN)
    if dy <= ZERO:
        raise NegativeProceeds("curve fee exceeds the bonds purchased")
    fee_base = from_real(cfg.phi_n.real * (1 - p) * dx.real, UP)
    gov = from_real(cfg.phi_g.real * cfg.phi_n.real * (1 - p) * dx.real / c.real, DOWN)

    s.z += dz - gov
    s.y -= dy
    s.gov_fees += gov
    maturity = t_c + cfg.position_duration
    s.y_l += dy
    s.long_maturity_sum += dy * maturity
    _adjust_checkpoint(s, t_c, longs=dy)
    receipt = PositionReceipt(Kind.LONG, dy, t_c, s.checkpoints[t_c].share_price)
    return TradeResult(
        receipt, dx, dy, dz, FeeBreakdown(fee_base, ZERO, gov), from_real(p, DOWN), ONE
    )


@atomic
@high_precision
def close_long(s: PoolState, cfg: PoolConfig, r: PositionReceipt, now: int | None = None) -> TradeResult:
    """Sell a long's bonds back to the pool. Matured positions are paid from the zombie reserves."""
    _sync(s, cfg, now)
    _validate(s, r, Kind.LONG)
    if _is_settled(s, r):
        from .checkpoints import redeem_matured

        return redeem_matured(s, cfg, r)
    remaining, new, mat = _split(r, cfg, s.time)
    c = s.c
    cr = c.real
    curve = _curve(s, cfg)
    p = curve.spot_price()
    floor = cfg.z_min.real if new > ZERO else None
    shares = curve.shares_out_for_bonds_in(new.real, floor)
    f_new = cfg.phi_n.real * (1 - p) * new.real
    f_mat = cfg.phi_m.real * mat.real
    f = f_new + f_mat
    g = cfg.phi_g.real
    proceeds = cr * shares + mat.real - f
    if proceeds < 0:
        raise NegativeProceeds("fees exceed the position's value")

    dx = from_real(proceeds, DOWN)
    gov = from_real(g * f / cr, DOWN)
    s.z -= from_real(shares + mat.real / cr - (1 - g) * f / cr, DOWN)
    s.zeta -= from_real(mat.real / cr - (1 - g) * f_mat / cr, DOWN)
    s.y += new
    s.gov_fees += gov
    s.y_l -= r.face
    s.long_maturity_sum -= r.face * r.maturity(cfg)
    _adjust_checkpoint(s, r.checkpoint_time, longs=-r.face)
    fees = FeeBreakdown(from_real(f_new, UP), from_real(f_mat, UP), gov)
    return TradeResult(r, dx, r.face, from_real(shares, DOWN), fees, from_real(p, DOWN), _fraction(remaining, cfg))


# -- shorts ----------------------------------------------------------------------


@atomic
@high_precision
def open_short(s: PoolState, cfg: PoolConfig, dy: FixedDecimal, now: int | None = None) -> TradeResult:
    """Sell ``dy`` bonds to the pool; the trader deposits the short's collateral."""
    if dy <= ZERO:
        raise InvalidInput("open_short needs a positive bond amount")
    t_c = _sync(s, cfg, now)
    c = s.c
    cr = c.real
    c0 = s.checkpoints[t_c].share_price
    curve = _curve(s, cfg)
    p = curve.spot_price()
    shares = curve.shares_out_for_bonds_in(dy.real, cfg.z_min.real)
    f_new = cfg.phi_n.real * (1 - p) * dy.real
    g = cfg.phi_g.real
    deposit = from_real(cr / c0.real * dy.real - cr * shares + f_new, UP)
    gov = from_real(g * f_new / cr, DOWN)

    # the fee stays in the pool; only the curve shares leave
    s.z -= from_real(shares - (1 - g) * f_new / cr, DOWN)
    s.y += dy
    s.gov_fees += gov
    maturity = t_c + cfg.position_duration
    s.y_s += dy
    s.short_maturity_sum += dy * maturity
    _adjust_checkpoint(s, t_c, shorts=dy)
    receipt = PositionReceipt(Kind.SHORT, dy, t_c, c0)
    return TradeResult(
        receipt, deposit, dy, from_real(shares, DOWN), FeeBreakdown(from_real(f_new, UP), ZERO, gov),
        from_real(p, DOWN), ONE,
    )


@atomic
@high_precision
def close_short(s: PoolState, cfg: PoolConfig, r: PositionReceipt, now: int | None = None) -> TradeResult:
    """Buy a short's bonds back from the pool and return the remaining collateral."""
    _sync(s, cfg, now)
    _validate(s, r, Kind.SHORT)
    if _is_settled(s, r):
        from .checkpoints import redeem_matured

        return redeem_matured(s, cfg, r)
    remaining, new, mat = _split(r, cfg, s.time)
    c = s.c
    cr = c.real
    if remaining > 0:
        c1 = cr
    else:
        rec = s.checkpoints.get(r.maturity(cfg))
        c1 = rec.share_price.real if rec is not None and rec.minted else cr
    curve = _curve(s, cfg)
    p = curve.spot_price()
    shares = curve.shares_in_for_bonds_out(new.real)
    f_new = cfg.phi_n.real * (1 - p) * new.real
    f_mat = cfg.phi_m.real * mat.real
    f = f_new + f_mat
    g = cfg.phi_g.real
    proceeds = c1 / r.open_share_price.real * r.face.real - cr * shares - mat.real - f
    if proceeds < 0:
        raise NegativeProceeds("the short owes more than its collateral")

    dx = from_real(proceeds, DOWN)
    gov = from_real(g * f / cr, DOWN)
    s.z += from_real(shares + mat.real / cr + (1 - g) * f / cr, DOWN)
    s.zeta += from_real(mat.real / cr + (1 - g) * f_mat / cr, DOWN)
    s.y -= new
    s.gov_fees += gov
    s.y_s -= r.face
    s.short_maturity_sum -= r.face * r.maturity(cfg)
    _adjust_checkpoint(s, r.checkpoint_time, shorts=-r.face)
    fees = FeeBreakdown(from_real(f_new, UP), from_real(f_mat, UP), gov)
    return TradeResult(r, dx, r.face, from_real(shares, UP), fees, from_real(p, DOWN), _fraction(remaining, cfg))


__all__ = [
    "FeeBreakdown",
    "TradeResult",
    "close_long",
    "close_short",
    "fee_mature",
    "fee_new",
    "open_long",
    "open_short",
]
