"""LP shares: initialization, present value, adding and removing liquidity.

Present value is measured in shares. It is the share reserves left after
every open position is hypothetically closed without fees, minus ``z_min``.
New bonds are closed on the curve (sales beyond the curve's capacity are
marked to 0, purchases beyond it to 1 base per bond) and matured bonds at
face value.

Removed LP shares become withdrawal shares. Whenever the pool has idle
liquidity, :func:`distribute_excess_idle` buys back as many of them as it can
while keeping the LP share price constant; bought-back shares become ready
and are redeemed for a pro-rata slice of ``z_r``.
"""
from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpfr

from .curve import RealCurve
from .errors import (
    AlreadyInitialized,
    ConvergenceError,
    InsufficientLiquidity,
    InsufficientShares,
    InvalidInput,
)
from .fixedmath import DOWN, ONE, SCALE, UP, ZERO, FixedDecimal, div, from_real, high_precision, mul_div
from .state import PoolConfig, PoolState, atomic, idle_liquidity, net_curve_numerator, require_initialized

NEWTON_TOLERANCE = mpfr("1e-12")
NEWTON_MAX_ITERATIONS = 50
BISECTION_MAX_ITERATIONS = 400


@dataclass(frozen=True)
class PresentValueBreakdown:
    pv: FixedDecimal
    n_new: FixedDecimal
    n_mature: FixedDecimal
    y_net_new: FixedDecimal
    y_net_mature: FixedDecimal


@dataclass(frozen=True)
class IdleDistribution:
    dz: FixedDecimal = ZERO
    dw: FixedDecimal = ZERO
    step: int = 0  # 0: nothing to do, 1: all idle usable, 2: capped by net shorts
    solver: str = "none"  # none | direct | affine | newton | bisection
    iterations: int = 0


@dataclass(frozen=True)
class RemoveResult:
    base: FixedDecimal
    withdrawal_shares: FixedDecimal
    redeemed: FixedDecimal
    distribution: IdleDistribution


# -- present value ---------------------------------------------------------------


class _PV:
    """PV as a function of shares removed, at 192 bits. Build inside ``high_precision``."""

    def __init__(self, s: PoolState, cfg: PoolConfig):
        self.z = s.z.real
        self.z_min = cfg.z_min.real
        self.c = s.c.real
        self.curve = RealCurve(s.z_e.real, s.y.real, self.c, s.mu.real, cfg.sigma.real)
        self.y_net_new = net_curve_numerator(s).real / cfg.position_duration
        self.y_net_mature = (s.y_l - s.y_s).real - self.y_net_new
        self.affine = net_curve_numerator(s).raw == 0

    def parts(self, dz) -> tuple[mpfr, mpfr, mpfr]:
        z1 = self.z - dz
        curve = self.curve.scaled(z1 / self.z) if dz else self.curve
        net = self.y_net_new
        if net > 0:
            sell_max = curve.max_sell(self.z_min)[0]
            n_new = -curve.shares_out_for_bonds_in(min(net, sell_max))
        elif net < 0:
            buy_max = curve.max_buy()[0]
            n_new = curve.shares_in_for_bonds_out(min(-net, buy_max), check=False)
            if -net > buy_max:
                n_new += (-net - buy_max) / self.c
        else:
            n_new = mpfr(0)
        n_mature = -self.y_net_mature / self.c
        return z1 + n_new + n_mature - self.z_min, n_new, n_mature

    def __call__(self, dz) -> mpfr:
        return self.parts(dz)[0]


@high_precision
def present_value(s: PoolState, cfg: PoolConfig, dz_removed: FixedDecimal = ZERO) -> PresentValueBreakdown:
    require_initialized(s)
    if dz_removed < ZERO or dz_removed > s.z - cfg.z_min:
        raise InvalidInput(f"cannot remove {dz_removed} shares")
    f = _PV(s, cfg)
    pv, n_new, n_mature = f.parts(dz_removed.real)
    numerator = net_curve_numerator(s)
    y_net_new = FixedDecimal.from_raw(numerator.raw // cfg.position_duration)
    return PresentValueBreakdown(
        from_real(pv, DOWN),
        from_real(n_new, DOWN),
        from_real(n_mature, DOWN),
        y_net_new,
        (s.y_l - s.y_s) - y_net_new,
    )


@high_precision
def lp_share_price(s: PoolState, cfg: PoolConfig) -> FixedDecimal:
    """PV per LP share, in shares (multiply by ``c`` for base)."""
    require_initialized(s)
    l = s.l_total
    if l <= ZERO:
        raise InsufficientShares("no LP shares outstanding")
    return from_real(_PV(s, cfg)(0) / l.real, DOWN)


# -- initialization and liquidity ------------------------------------------------


def _sync(s: PoolState, cfg: PoolConfig, now: int | None) -> None:
    from .trading import _sync as sync

    sync(s, cfg, now)


@atomic
@high_precision
def initialize(
    s: PoolState, cfg: PoolConfig, contribution: FixedDecimal, target_price: FixedDecimal, now: int | None = None
) -> FixedDecimal:
    """Seed the pool with ``contribution`` base at spot price ``target_price``.

    Solves ``c * z_e + p * y = c * z`` together with ``spot(z_e, y) = p``
    (with ``mu = c``) and returns the LP shares credited to the initializer:
    ``z`` minted minus ``z_min`` burned.
    """
    if s.initialized:
        raise AlreadyInitialized("pool is already initialized")
    if not ZERO < target_price <= ONE:
        raise InvalidInput(f"target price must lie in (0, 1], got {target_price}")
    if now is not None:
        if now < s.time:
            raise InvalidInput("time cannot move backwards")
        s.time = now
    c = s.c
    z = div(contribution, c, DOWN)
    if z <= cfg.z_min:
        raise InvalidInput("contribution does not exceed the minimum share reserves")
    p = target_price.real
    q = p ** (1 / cfg.sigma.real)
    y = from_real(c.real * z.real / (p + q), DOWN)
    z_e = from_real(y.real * q / c.real, DOWN)
    if z_e <= ZERO or y <= ZERO:
        raise InvalidInput("contribution too small for the target price")
    s.mu = c
    s.z = z
    s.y = y
    s.zeta = z - z_e
    s.l_a = z - cfg.z_min
    s.initialized = True
    s.maturity_cursor = s.time - s.time % cfg.d_c
    from .checkpoints import latest_checkpoint_time, mint_checkpoint

    mint_checkpoint(s, cfg, latest_checkpoint_time(s.time, cfg))
    return s.l_a


@atomic
@high_precision
def add_liquidity(s: PoolState, cfg: PoolConfig, dx: FixedDecimal, now: int | None = None) -> FixedDecimal:
    """Add ``dx`` base at an unchanged spot price; returns LP shares minted."""
    if dx <= ZERO:
        raise InvalidInput("add_liquidity needs a positive base amount")
    _sync(s, cfg, now)
    pv0 = _PV(s, cfg)(0)
    l = s.l_total
    z0 = s.z
    z1 = z0 + div(dx, s.c, DOWN)
    s.z = z1
    s.zeta = mul_div(s.zeta, z1, z0, DOWN)
    s.y = mul_div(s.y, z1, z0, DOWN)
    pv1 = _PV(s, cfg)(0)
    if l <= ZERO:
        dl = z1 - z0
    elif pv0 <= 0:
        raise InsufficientLiquidity("pool present value is not positive")
    else:
        dl = from_real((pv1 - pv0) * l.real / pv0, DOWN)
    s.l_a += dl
    return dl


@atomic
def remove_liquidity(
    s: PoolState,
    cfg: PoolConfig,
    shares: FixedDecimal,
    queued_ahead: FixedDecimal = ZERO,
    now: int | None = None,
) -> RemoveResult:
    """Convert LP shares to withdrawal shares and redeem whatever becomes ready.

    ``queued_ahead`` is the amount of withdrawal shares, not yet ready, that
    other LPs queued earlier; they are served first.
    """
    if shares < ZERO:
        raise InvalidInput("negative share amount")
    ready_before = s.l_r
    _sync(s, cfg, now)
    queued_ahead = max(queued_ahead - (s.l_r - ready_before), ZERO)
    if shares == ZERO:
        return RemoveResult(ZERO, ZERO, ZERO, IdleDistribution())
    if shares > s.l_a:
        raise InsufficientShares(f"only {s.l_a} active LP shares")
    s.l_a -= shares
    s.l_w += shares
    dist = distribute_excess_idle(s, cfg)
    ready = min(shares, max(dist.dw - queued_ahead, ZERO))
    base = redeem_withdrawal_shares(s, cfg, ready) if ready > ZERO else ZERO
    return RemoveResult(base, shares - ready, ready, dist)


@atomic
def redeem_withdrawal_shares(s: PoolState, cfg: PoolConfig, dw: FixedDecimal, now: int | None = None) -> FixedDecimal:
    """Redeem ``dw`` ready withdrawal shares for ``c * dw * z_r / l_r`` base."""
    if dw < ZERO:
        raise InvalidInput("negative share amount")
    _sync(s, cfg, now)
    if dw == ZERO:
        return ZERO
    if dw > s.l_r:
        raise InsufficientShares(f"only {s.l_r} withdrawal shares are ready")
    share_out = mul_div(dw, s.z_r, s.l_r, DOWN)
    base = FixedDecimal.from_raw(s.c.raw * dw.raw * s.z_r.raw // (s.l_r.raw * SCALE))
    s.z_r -= share_out
    s.l_r -= dw
    s.l_w -= dw
    return base


# -- excess idle -----------------------------------------------------------------


def _solve(g, lo: mpfr, hi: mpfr, guess: mpfr, scale: mpfr) -> tuple[mpfr, str, int]:
    """Root of decreasing ``g`` on ``[lo, hi]``: Newton first, bisection as fallback."""
    x = min(max(guess, lo), hi)
    tol = NEWTON_TOLERANCE * scale
    for i in range(1, NEWTON_MAX_ITERATIONS + 1):
        gx = g(x)
        if abs(gx) <= tol:
            return x, "newton", i
        h = max(mpfr("1e-9") * abs(x), mpfr("1e-12"))
        d = (g(x + h) - g(x - h)) / (2 * h)
        if not d < 0:
            break
        x_next = x - gx / d
        if not lo <= x_next <= hi:
            break
        x = x_next
    a, b = lo, hi
    for i in range(1, BISECTION_MAX_ITERATIONS + 1):
        m = (a + b) / 2
        gm = g(m)
        if abs(gm) <= tol or b - a <= scale * mpfr("1e-40"):
            return m, "bisection", i
        if gm > 0:
            a = m
        else:
            b = m
    raise ConvergenceError("withdrawal distribution did not converge")


@high_precision
def plan_distribution(s: PoolState, cfg: PoolConfig) -> IdleDistribution:
    """How much idle liquidity to pay out and how many withdrawal shares it buys back."""
    if not s.initialized:
        return IdleDistribution()
    w = s.l_w - s.l_r
    if w <= ZERO:
        return IdleDistribution()
    idle = idle_liquidity(s, cfg)
    if idle <= ZERO:
        return IdleDistribution()
    f = _PV(s, cfg)
    z = f.z
    idle_r = idle.real
    net_short = -f.y_net_new
    step = 1
    dz_max = idle_r
    if net_short > 0:
        buy_max = f.curve.max_buy()[0]
        # max buy is homogeneous of degree one in the reserves
        if buy_max * (z - idle_r) / z < net_short:
            step = 2
            dz_max = z * (1 - net_short / buy_max) if buy_max > 0 else mpfr(0)
            if dz_max <= 0:
                return IdleDistribution(step=2)
    pv0 = f(0)
    if pv0 <= 0:
        return IdleDistribution(step=step)
    l = s.l_total.real
    dw_real = (1 - f(dz_max) / pv0) * l
    if dw_real <= w.real:
        dz = from_real(dz_max, DOWN)
        dw = min(from_real(dw_real, UP), w)
        return IdleDistribution(min(dz, idle), max(dw, ZERO), step, "direct", 0)
    target = pv0 * (l - w.real) / l
    if f.affine:
        dz_real, solver, iterations = pv0 - target, "affine", 0
    else:
        dz_real, solver, iterations = _solve(lambda x: f(x) - target, mpfr(0), dz_max, pv0 - target, target)
    dz = min(from_real(dz_real, DOWN), idle)
    return IdleDistribution(max(dz, ZERO), w, step, solver, iterations)


def distribute_excess_idle(s: PoolState, cfg: PoolConfig) -> IdleDistribution:
    """Pay idle liquidity into the withdrawal pool at a constant LP share price."""
    plan = plan_distribution(s, cfg)
    if plan.dw <= ZERO and plan.dz <= ZERO:
        return plan
    z0 = s.z
    z1 = z0 - plan.dz
    s.z = z1
    s.zeta = mul_div(s.zeta, z1, z0, DOWN)
    s.y = mul_div(s.y, z1, z0, DOWN)
    s.l_r += plan.dw
    s.z_r += plan.dz
    return plan


__all__ = [
    "IdleDistribution",
    "PresentValueBreakdown",
    "RemoveResult",
    "add_liquidity",
    "distribute_excess_idle",
    "initialize",
    "lp_share_price",
    "plan_distribution",
    "present_value",
    "redeem_withdrawal_shares",
    "remove_liquidity",
]
