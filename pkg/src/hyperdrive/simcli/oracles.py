"""Brute-force reference computations, independent of the library's solvers.

Everything here uses mpmath at 32 significant digits and solves for roots of
the invariant rather than through closed forms. Every root is certified by a
sign change across a bracket of the requested relative width, as bisection
would give. The oracles are slow and meant for small states.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

import mpmath
from mpmath import mp, mpf

from ..fixedmath import FixedDecimal
from ..state import Kind, PoolConfig, PoolState, PositionReceipt, global_exposure

DPS = 32
MAX_ORACLE_EVENTS = 200
BISECTION_STEPS = 200


def _m(x: FixedDecimal | int) -> mpf:
    if isinstance(x, FixedDecimal):
        return mpf(x.raw) / 10**18
    return mpf(x)


def _bisect(fn, lo: mpf, hi: mpf, rtol: mpf | None = None) -> mpf:
    """Root of monotone ``fn`` with a sign change on ``[lo, hi]``."""
    rtol = mpf(10) ** (6 - DPS) if rtol is None else rtol
    f_lo = fn(lo)
    if f_lo == 0:
        return lo
    for _ in range(BISECTION_STEPS):
        if hi - lo <= rtol * max(abs(lo), abs(hi)):
            break
        mid = (lo + hi) / 2
        f_mid = fn(mid)
        if f_mid == 0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return (lo + hi) / 2


def _bracketed_root(fn, lo: mpf, hi: mpf, rtol: mpf | None = None) -> mpf:
    """Root of monotone ``fn`` on ``[lo, hi]``.

    Anderson-Bjorck regula falsi proposes the root; it is accepted only if
    ``fn`` changes sign across ``x * (1 -+ rtol)``, the same certificate plain
    bisection would give. Otherwise plain bisection runs.
    """
    rtol = mpf(10) ** (6 - DPS) if rtol is None else rtol
    try:
        x = mpmath.findroot(fn, (lo, hi), solver="anderson", verify=False, tol=rtol * min(1, abs(hi)) / 4)
    except (ZeroDivisionError, ValueError):
        x = None
    if x is not None and lo <= x <= hi:
        step = rtol * abs(x) / 2
        a, b = fn(max(x - step, lo)), fn(min(x + step, hi))
        if a == 0 or b == 0 or (a > 0) != (b > 0):
            return x
    return _bisect(fn, lo, hi, rtol)


class Infeasible(ArithmeticError):
    """The requested trade runs the curve out of inventory."""


@dataclass
class OracleCurve:
    z_e: mpf
    y: mpf
    c: mpf
    mu: mpf
    sigma: mpf

    @classmethod
    def from_state(cls, s: PoolState, cfg: PoolConfig) -> "OracleCurve":
        with mp.workdps(DPS):
            return cls(_m(s.z_e), _m(s.y), _m(s.c), _m(s.mu), _m(cfg.sigma))

    def invariant(self, z: mpf, y: mpf) -> mpf:
        a = 1 - self.sigma
        return self.c / self.mu * mpmath.power(self.mu * z, a) + mpmath.power(y, a)

    def k(self) -> mpf:
        return self.invariant(self.z_e, self.y)

    @mp.workdps(DPS)
    def spot(self) -> mpf:
        return mpmath.power(self.mu * self.z_e / self.y, self.sigma)

    @mp.workdps(DPS)
    def sell_bonds(self, dy: mpf) -> mpf:
        """Shares out for ``dy`` bonds in; the curve moves."""
        if dy == 0:
            return mpf(0)
        k = self.k()
        y1 = self.y + dy
        if self.invariant(mpf(0), y1) > k:
            raise Infeasible("share reserves exhausted")
        z1 = _bracketed_root(lambda z: self.invariant(z, y1) - k, mpf(0), self.z_e)
        out = self.z_e - z1
        self.z_e, self.y = z1, y1
        return out

    @mp.workdps(DPS)
    def buy_bonds(self, dy: mpf) -> mpf:
        """Shares in for ``dy`` bonds out; the curve moves."""
        if dy == 0:
            return mpf(0)
        if dy >= self.y:
            raise Infeasible("bond reserves exhausted")
        k = self.k()
        y1 = self.y - dy
        hi = self.z_e * 2
        while self.invariant(hi, y1) < k:
            hi *= 2
        z1 = _bracketed_root(lambda z: self.invariant(z, y1) - k, self.z_e, hi)
        inp = z1 - self.z_e
        self.z_e, self.y = z1, y1
        return inp

    @mp.workdps(DPS)
    def bonds_for_shares(self, dz: mpf) -> mpf:
        """Bonds out for ``dz`` shares in; the curve moves."""
        if dz == 0:
            return mpf(0)
        k = self.k()
        z1 = self.z_e + dz
        if self.invariant(z1, mpf(0)) > k:
            raise Infeasible("bond reserves exhausted")
        y1 = _bracketed_root(lambda y: self.invariant(z1, y) - k, mpf(0), self.y)
        out = self.y - y1
        self.z_e, self.y = z1, y1
        return out

    @mp.workdps(DPS)
    def max_buy(self) -> mpf:
        """Bonds purchasable before the spot price reaches one, by root-finding on the invariant."""
        k = self.k()
        # on the curve, spot = 1 where mu * z = y
        y1 = _bracketed_root(lambda y: self.invariant(y / self.mu, y) - k, mpf(0), self.y)
        return max(self.y - y1, mpf(0))

    @mp.workdps(DPS)
    def can_buy(self, dy: mpf) -> bool:
        """Whether ``dy`` bonds can be bought without the spot price passing one."""
        y1 = self.y - dy
        # the post-trade point has mu * z <= y iff the invariant at z = y / mu is at least k
        return y1 > 0 and self.invariant(y1 / self.mu, y1) >= self.k()

    @mp.workdps(DPS)
    def can_sell(self, dy: mpf, z_floor: mpf) -> bool:
        """Whether ``dy`` bonds can be sold without share reserves dropping below ``z_floor``."""
        return self.invariant(z_floor, self.y + dy) <= self.k()

    @mp.workdps(DPS)
    def max_sell(self, z_floor: mpf) -> mpf:
        k = self.k()
        if z_floor >= self.z_e:
            return mpf(0)
        hi = self.y * 2
        while self.invariant(z_floor, hi) < k:
            hi *= 2
        return _bracketed_root(lambda y: self.invariant(z_floor, y) - k, self.y, hi) - self.y


# -- present value by closing every position ---------------------------------------


def open_positions(receipts: Iterable[PositionReceipt], s: PoolState) -> list[PositionReceipt]:
    """Positions still backed by the live reserves (not yet moved to the zombie reserves)."""
    return [r for r in receipts if r.checkpoint_time >= s.maturity_cursor]


def pv_by_closing(
    positions: list[PositionReceipt], s: PoolState, cfg: PoolConfig, dz_removed: FixedDecimal | mpf = 0
) -> mpf:
    """Shares LPs could remove after closing every position fee-free, one at a time.

    Raises :class:`Infeasible` when a close runs the curve dry; those states
    exercise the PV caps and are checked separately.
    """
    with mp.workdps(DPS):
        dz = _m(dz_removed) if isinstance(dz_removed, FixedDecimal) else mpf(dz_removed)
        z0 = _m(s.z)
        f = (z0 - dz) / z0
        curve = OracleCurve.from_state(s, cfg)
        curve.z_e *= f
        curve.y *= f
        z = z0 - dz
        D = cfg.position_duration
        # alternate sells and buys so the intermediate states stay near the start
        longs = sorted((r for r in positions if r.kind is Kind.LONG), key=lambda r: r.checkpoint_time)
        shorts = sorted((r for r in positions if r.kind is Kind.SHORT), key=lambda r: r.checkpoint_time)
        order = []
        for i in range(max(len(longs), len(shorts))):
            order.extend(x[i] for x in (longs, shorts) if i < len(x))
        for r in order:
            remaining = min(max(r.checkpoint_time + D - s.time, 0), D)
            face = _m(r.face)
            new = face * remaining / D
            mature = face - new
            if r.kind is Kind.LONG:
                z -= curve.sell_bonds(new) + mature / curve.c
            else:
                z += curve.buy_bonds(new) + mature / curve.c
        return z - _m(cfg.z_min)


def pv_caps_triggered(s: PoolState, cfg: PoolConfig) -> bool:
    """True when the net new-bond position exceeds what the curve can absorb."""
    with mp.workdps(DPS):
        curve = OracleCurve.from_state(s, cfg)
        net = (_m(s.long_maturity_sum) - _m(s.short_maturity_sum) - (_m(s.y_l) - _m(s.y_s)) * s.time) / cfg.position_duration
        if net > 0:
            return not curve.can_sell(net, _m(cfg.z_min))
        if net < 0:
            return not curve.can_buy(-net)
        return False


def pv_netted(s: PoolState, cfg: PoolConfig, dz: mpf) -> mpf:
    """PV from the netted position with the capacity caps, solved by bisection."""
    with mp.workdps(DPS):
        z0 = _m(s.z)
        f = (z0 - dz) / z0
        curve = OracleCurve.from_state(s, cfg)
        curve.z_e *= f
        curve.y *= f
        net = (_m(s.long_maturity_sum) - _m(s.short_maturity_sum) - (_m(s.y_l) - _m(s.y_s)) * s.time) / cfg.position_duration
        mature = (_m(s.y_l) - _m(s.y_s)) - net
        if net > 0:
            z_min = _m(cfg.z_min)
            n_new = -curve.sell_bonds(net if curve.can_sell(net, z_min) else curve.max_sell(z_min))
        elif net < 0:
            cap = -net if curve.can_buy(-net) else curve.max_buy()
            n_new = curve.buy_bonds(cap) + (-net - cap) / curve.c
        else:
            n_new = mpf(0)
        return z0 - dz + n_new - mature / curve.c - _m(cfg.z_min)


@dataclass
class DistributionOracle:
    dz: mpf
    dw: mpf
    capped: bool  # True when every pending withdrawal share was bought back


def distribution_oracle(s: PoolState, cfg: PoolConfig) -> DistributionOracle | None:
    """Idle distribution from first principles; ``None`` when there is nothing to distribute."""
    with mp.workdps(DPS):
        w = _m(s.l_w) - _m(s.l_r)
        if w <= 0:
            return None
        c = _m(s.c)
        idle = _m(s.z) - _m(global_exposure(s, cfg)) / c - _m(cfg.z_min)
        if idle <= 0:
            return None
        z = _m(s.z)
        net = (_m(s.long_maturity_sum) - _m(s.short_maturity_sum) - (_m(s.y_l) - _m(s.y_s)) * s.time) / cfg.position_duration
        dz_max = idle
        if net < 0:
            def buy_room(dz):
                curve = OracleCurve.from_state(s, cfg)
                curve.z_e *= (z - dz) / z
                curve.y *= (z - dz) / z
                y1 = curve.y + net
                return curve.invariant(y1 / curve.mu, y1) - curve.k() if y1 > 0 else mpf(-1)

            if buy_room(idle) < 0:
                if buy_room(mpf(0)) <= 0:
                    return None
                dz_max = _bracketed_root(buy_room, mpf(0), idle)
        l = _m(s.l_a) + w
        pv0 = pv_netted(s, cfg, mpf(0))
        dw = (1 - pv_netted(s, cfg, dz_max) / pv0) * l
        if dw <= w:
            return DistributionOracle(dz_max, dw, False)
        target = pv0 * (l - w) / l
        dz = _bracketed_root(lambda x: pv_netted(s, cfg, x) - target, mpf(0), dz_max, mpf("1e-13"))
        return DistributionOracle(dz, w, True)


# -- scenario-level report ------------------------------------------------------------


def rel(a, b) -> mpf:
    a, b = mpf(a), mpf(b)
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else mpf(0)


@dataclass
class Deviation:
    checked: int = 0
    max_rel: mpf = field(default_factory=lambda: mpf(0))
    skipped: int = 0

    def add(self, got, want) -> None:
        self.checked += 1
        self.max_rel = max(self.max_rel, rel(got, want))

    def to_json(self) -> dict[str, Any]:
        return {"checked": self.checked, "skipped": self.skipped, "max_rel": mpmath.nstr(self.max_rel, 6)}


class OracleLimitError(ValueError):
    pass


def _trade_oracle(kind: str, pre: PoolState, cfg: PoolConfig, result: dict[str, Any], r: PositionReceipt | None) -> mpf | None:
    """Reference value for the trade's headline amount, or ``None`` when it has no curve solve."""
    with mp.workdps(DPS):
        curve = OracleCurve.from_state(pre, cfg)
        p = curve.spot()
        c = curve.c
        phi_n, phi_m = _m(cfg.phi_n), _m(cfg.phi_m)
        if kind == "open_long":
            dx = mpf(result["base"])
            dz = mpf(result["curve_shares"])
            return curve.bonds_for_shares(dz) - phi_n * (1 / p - 1) * dx
        if kind == "open_short":
            dy = mpf(result["bonds"])
            c0 = _m(pre.checkpoints[pre.time - pre.time % cfg.d_c].share_price)
            return c / c0 * dy - c * curve.sell_bonds(dy) + phi_n * (1 - p) * dy
        if r is None or result.get("t_r") is None:
            return None
        D = cfg.position_duration
        remaining = min(max(r.checkpoint_time + D - pre.time, 0), D)
        face = _m(r.face)
        new = mpf(r.face.raw * remaining // D) / 10**18
        mat = face - new
        fees = phi_n * (1 - p) * new + phi_m * mat
        if kind == "close_long":
            return c * curve.sell_bonds(new) + mat - fees
        if remaining > 0:
            c1 = c
        else:
            rec = pre.checkpoints.get(r.checkpoint_time + D)
            c1 = _m(rec.share_price) if rec is not None and rec.minted else c
        return c1 / _m(r.open_share_price) * face - c * curve.buy_bonds(new) - mat - fees


def _headline(kind: str, result: dict[str, Any]) -> str:
    return result["bonds"] if kind == "open_long" else result["base"]


def _probe_withdrawal(s: PoolState) -> PoolState:
    """The same state with a quarter of the active LP shares queued for withdrawal."""
    probe = s.copy()
    q = FixedDecimal.from_raw(s.l_a.raw // 4)
    probe.l_a -= q
    probe.l_w += q
    return probe


def _check_distribution(s: PoolState, cfg: PoolConfig, dev: Deviation, solvers: dict[str, int]) -> None:
    from .. import lp

    plan = lp.plan_distribution(s, cfg)
    ref = distribution_oracle(s, cfg)
    if ref is None:
        if plan.dz > FixedDecimal(0):
            dev.add(_m(plan.dz), mpf(0))
        return
    if ref.dz <= 0 and plan.dz == FixedDecimal(0):
        return
    if plan.solver:
        solvers[plan.solver] = solvers.get(plan.solver, 0) + 1
    # the plan rounds dz down to 18 decimals
    dev.add(_m(plan.dz), ref.dz)


def oracle_check(cfg: PoolConfig, sc, seed: int = 0) -> dict[str, Any]:
    """Rerun a small scenario and recheck every solve against the brute-force oracles.

    Scenarios longer than ``MAX_ORACLE_EVENTS`` events are rejected. ``seed``
    is accepted for interface symmetry with ``simulate``; the report only
    depends on the scenario.
    """
    from .. import lp
    from ..checkpoints import latest_checkpoint_time, mint_checkpoint
    from .runner import run_scenario

    if len(sc.events) > MAX_ORACLE_EVENTS:
        raise OracleLimitError(
            f"scenario has {len(sc.events)} events; the oracle accepts at most {MAX_ORACLE_EVENTS}"
        )
    curve_dev, pv_dev, dist_dev = Deviation(), Deviation(), Deviation()
    solvers: dict[str, int] = {}
    known: dict[str, PositionReceipt] = {}

    def observe(i, ev, before, engine, result):
        s = engine.state
        if result is not None and ev.kind in ("open_long", "open_short", "close_long", "close_short"):
            pre = before.copy()
            mint_checkpoint(pre, cfg, latest_checkpoint_time(pre.time, cfg))
            r = known.get(ev.args.get("receipt", ""))
            want = _trade_oracle(ev.kind, pre, cfg, result, r)
            if want is not None:
                curve_dev.add(mpf(_headline(ev.kind, result)), want)
        known.update({rid: rec for rid, (_, rec) in engine.receipts.items()})
        if not s.initialized:
            return
        if pv_caps_triggered(s, cfg):
            pv_dev.skipped += 1
        else:
            positions = open_positions((rec for _, rec in engine.receipts.values()), s)
            try:
                pv_dev.add(_m(lp.present_value(s, cfg).pv), pv_by_closing(positions, s, cfg))
            except Infeasible:
                pv_dev.skipped += 1
        _check_distribution(s, cfg, dist_dev, solvers)
        _check_distribution(_probe_withdrawal(s), cfg, dist_dev, solvers)

    traj = run_scenario(cfg, sc, observer=observe)
    worst = max(curve_dev.max_rel, pv_dev.max_rel, dist_dev.max_rel)
    return {
        "events": len(sc.events),
        "failed_events": sum(1 for r in traj.records if not r["ok"]),
        "fatal": traj.fatal,
        "curve_solves": curve_dev.to_json(),
        "present_value": pv_dev.to_json(),
        "idle_distribution": {**dist_dev.to_json(), "solvers": dict(sorted(solvers.items()))},
        "max_rel": mpmath.nstr(worst, 6),
        "within_1e-6": bool(worst <= mpf("1e-6")) and traj.fatal is None,
    }


__all__ = [
    "DistributionOracle",
    "Infeasible",
    "MAX_ORACLE_EVENTS",
    "OracleLimitError",
    "OracleCurve",
    "distribution_oracle",
    "open_positions",
    "oracle_check",
    "pv_by_closing",
    "pv_caps_triggered",
    "pv_netted",
]
