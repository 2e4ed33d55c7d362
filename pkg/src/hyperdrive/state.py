"""Pool configuration, mutable pool state, exposure ledger and solvency."""
from __future__ import annotations

import copy
import enum
import functools
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping

from .curve import CurveParams, CurveReserves
from .errors import CurveDomainError, NotInitialized, SolvencyViolation
from .fixedmath import ONE, UP, ZERO, FixedDecimal, div, fixed

_FEE_FIELDS = ("phi_n", "phi_m", "phi_g", "phi_g_zombie")


class Kind(enum.Enum):
    LONG = "long"
    SHORT = "short"


@dataclass(frozen=True)
class PoolConfig:
    position_duration: int
    d_c: int
    sigma: FixedDecimal
    phi_n: FixedDecimal = ZERO
    phi_m: FixedDecimal = ZERO
    phi_g: FixedDecimal = ZERO
    phi_g_zombie: FixedDecimal = ZERO
    z_min: FixedDecimal = ZERO

    def __post_init__(self):
        for name in ("sigma", *_FEE_FIELDS, "z_min"):
            object.__setattr__(self, name, fixed(getattr(self, name)))
        if self.d_c <= 0 or self.position_duration <= 0:
            raise ValueError("durations must be positive")
        if self.position_duration % self.d_c:
            raise ValueError("checkpoint duration must evenly divide the position duration")
        if not ZERO < self.sigma < ONE:
            raise ValueError(f"sigma must lie in (0, 1), got {self.sigma}")
        for name in ("phi_n", "phi_m", "phi_g"):
            if not ZERO <= getattr(self, name) <= ONE:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not ZERO <= self.phi_g_zombie < ONE:
            raise ValueError("phi_g_zombie must lie in [0, 1)")
        if self.z_min < ZERO:
            raise ValueError("z_min must be non-negative")

    @property
    def checkpoints_per_term(self) -> int:
        return self.position_duration // self.d_c

    def curve(self, mu: FixedDecimal) -> CurveParams:
        return CurveParams(self.sigma, mu)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PoolConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for k, v in data.items():
            kwargs[k] = int(v) if k in ("d_c", "position_duration") else fixed(str(v))
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v if isinstance(v, int) else str(v)
        return out


@dataclass(frozen=True)
class CheckpointRecord:
    share_price: FixedDecimal = ZERO
    longs_outstanding: FixedDecimal = ZERO
    shorts_outstanding: FixedDecimal = ZERO
    minted: bool = False


@dataclass(frozen=True)
class PositionReceipt:
    kind: Kind
    face: FixedDecimal
    checkpoint_time: int
    open_share_price: FixedDecimal

    def maturity(self, cfg: PoolConfig) -> int:
        return self.checkpoint_time + cfg.position_duration


@dataclass
class ZombieAudit:
    """Cumulative base-denominated flows through the zombie reserves."""

    set_aside: FixedDecimal = ZERO
    paid: FixedDecimal = ZERO
    fees: FixedDecimal = ZERO
    interest_lp: FixedDecimal = ZERO
    interest_gov: FixedDecimal = ZERO
    # interest earned by zombie shares, in units of 1e-36 base so that the
    # total does not depend on how share price updates were chunked
    accrued_e36: int = 0

    @property
    def accrued(self) -> FixedDecimal:
        return FixedDecimal.from_raw(self.accrued_e36 // 10**18)


@dataclass
class PoolState:
    z: FixedDecimal = ZERO
    y: FixedDecimal = ZERO
    zeta: FixedDecimal = ZERO
    c: FixedDecimal = ONE
    mu: FixedDecimal = ONE
    l_a: FixedDecimal = ZERO
    l_w: FixedDecimal = ZERO
    l_r: FixedDecimal = ZERO
    z_r: FixedDecimal = ZERO
    z_zombie: FixedDecimal = ZERO
    x_zombie: FixedDecimal = ZERO
    gov_fees: FixedDecimal = ZERO
    y_l: FixedDecimal = ZERO
    # sum of face * maturity_time over open longs / shorts; average maturity
    # is derived from these so y_l * t_l equals the per-position sum exactly
    long_maturity_sum: FixedDecimal = ZERO
    y_s: FixedDecimal = ZERO
    short_maturity_sum: FixedDecimal = ZERO
    time: int = 0
    initialized: bool = False
    last_minted: int = -1
    # next checkpoint time whose positions have not been matured yet
    maturity_cursor: int = 0
    checkpoints: dict[int, CheckpointRecord] = field(default_factory=dict)
    audit: ZombieAudit = field(default_factory=ZombieAudit)

    def copy(self) -> "PoolState":
        new = copy.copy(self)
        new.checkpoints = dict(self.checkpoints)
        new.audit = replace(self.audit)
        return new

    def restore(self, other: "PoolState") -> None:
        self.__dict__.update(other.__dict__)

    def set_share_price(self, c: FixedDecimal) -> None:
        if c <= ZERO:
            raise ValueError("share price must be positive")
        self.audit.accrued_e36 += self.z_zombie.raw * (c.raw - self.c.raw)
        self.c = c

    @property
    def z_e(self) -> FixedDecimal:
        return self.z - self.zeta

    @property
    def l_total(self) -> FixedDecimal:
        return self.l_a + self.l_w - self.l_r

    def reserves(self) -> CurveReserves:
        return CurveReserves(self.z_e, self.y, self.c)

    def t_l(self, cfg: PoolConfig) -> FixedDecimal:
        return _average_remaining(self.y_l, self.long_maturity_sum, self.time, cfg)

    def t_s_avg(self, cfg: PoolConfig) -> FixedDecimal:
        return _average_remaining(self.y_s, self.short_maturity_sum, self.time, cfg)

    def snapshot(self, cfg: PoolConfig) -> dict[str, str]:
        """Flat key -> decimal string document of every field."""
        out: dict[str, str] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "checkpoints":
                for t in sorted(v):
                    rec = v[t]
                    out[f"checkpoint.{t}.share_price"] = str(rec.share_price)
                    out[f"checkpoint.{t}.longs_outstanding"] = str(rec.longs_outstanding)
                    out[f"checkpoint.{t}.shorts_outstanding"] = str(rec.shorts_outstanding)
                    out[f"checkpoint.{t}.minted"] = str(rec.minted).lower()
            elif f.name == "audit":
                for af in fields(v):
                    if af.name != "accrued_e36":
                        out[f"audit.{af.name}"] = str(getattr(v, af.name))
                out["audit.accrued"] = str(v.accrued)
            elif isinstance(v, bool):
                out[f.name] = str(v).lower()
            else:
                out[f.name] = str(v)
        out["z_e"] = str(self.z_e)
        out["t_l"] = str(self.t_l(cfg))
        out["t_s_avg"] = str(self.t_s_avg(cfg))
        return out


def _average_remaining(face: FixedDecimal, maturity_sum: FixedDecimal, now: int, cfg: PoolConfig) -> FixedDecimal:
    if face == ZERO:
        return ZERO
    # (sum(face_i * T_i) - face * now) / (face * D)
    return FixedDecimal.from_raw(
        (maturity_sum.raw - face.raw * now) * 10**18 // (face.raw * cfg.position_duration)
    )


def net_curve_numerator(s: PoolState) -> FixedDecimal:
    """``(y_l * t_l - y_s * t_s) * D`` exactly, for the pool's current time."""
    return (s.long_maturity_sum - s.short_maturity_sum) - (s.y_l - s.y_s) * s.time


def require_initialized(s: PoolState) -> None:
    if not s.initialized:
        raise NotInitialized("pool is not initialized")


def effective_share_reserves(s: PoolState) -> FixedDecimal:
    require_initialized(s)
    return s.z - s.zeta


def checkpoint_exposure(rec: CheckpointRecord) -> FixedDecimal:
    return max(rec.longs_outstanding - rec.shorts_outstanding, ZERO)


def global_exposure(s: PoolState, cfg: PoolConfig, now: int | None = None) -> FixedDecimal:
    """Sum of per-checkpoint exposure over the checkpoints of the current term."""
    now = s.time if now is None else now
    latest = now - now % cfg.d_c
    oldest = latest - (cfg.checkpoints_per_term - 1) * cfg.d_c
    total = 0
    get = s.checkpoints.get
    for t in range(max(oldest, 0), latest + 1, cfg.d_c):
        rec = get(t)
        if rec is not None:
            net = rec.longs_outstanding.raw - rec.shorts_outstanding.raw
            if net > 0:
                total += net
    return FixedDecimal.from_raw(total)


def _solvency_margin(s: PoolState, cfg: PoolConfig) -> FixedDecimal:
    exposure = global_exposure(s, cfg)
    return s.z - div(exposure, s.c, rounding=UP) - cfg.z_min


def idle_liquidity(s: PoolState, cfg: PoolConfig) -> FixedDecimal:
    """Shares removable without breaching solvency, clamped at zero."""
    return max(_solvency_margin(s, cfg), ZERO)


def check_solvency(s: PoolState, cfg: PoolConfig) -> bool:
    return _solvency_margin(s, cfg) >= ZERO


_open_transactions: set[int] = set()


class transaction:
    """Roll ``s`` back if the block raises or leaves the pool insolvent.

    Nested transactions on the same state defer to the outermost one.
    """

    __slots__ = ("s", "cfg", "saved")

    def __init__(self, s: PoolState, cfg: PoolConfig):
        self.s = s
        self.cfg = cfg
        self.saved = None

    def __enter__(self):
        key = id(self.s)
        if key not in _open_transactions:
            self.saved = self.s.copy()
            _open_transactions.add(key)
        return self

    def __exit__(self, exc_type, exc, tb):
        if self.saved is None:
            return False
        s = self.s
        try:
            if exc_type is None and s.initialized:
                if s.z_e <= ZERO:
                    exc = CurveDomainError("effective share reserves must stay positive")
                elif not check_solvency(s, self.cfg):
                    exc = SolvencyViolation("operation would leave the pool insolvent")
                else:
                    return False
                s.restore(self.saved)
                raise exc
            if exc_type is not None:
                s.restore(self.saved)
            return False
        finally:
            _open_transactions.discard(id(s))


def atomic(fn):
    """Run ``fn(state, cfg, ...)`` inside a :func:`transaction`."""

    @functools.wraps(fn)
    def wrapper(s: PoolState, cfg: PoolConfig, *args, **kwargs):
        with transaction(s, cfg):
            return fn(s, cfg, *args, **kwargs)

    return wrapper
