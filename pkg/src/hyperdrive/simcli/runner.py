"""Drive an engine through a scenario and record a trajectory."""
from __future__ import annotations

import csv
import dataclasses
import enum
import functools
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .. import curve, lp
from ..engine import Hyperdrive
from ..errors import ConvergenceError, HyperdriveError
from ..fixedmath import UP, ZERO, FixedDecimal, mul
from ..state import PoolConfig, check_solvency, global_exposure, idle_liquidity
from .scenario import Scenario, ScenarioEvent

SUMMARY_COLUMNS = (
    "index", "event", "ok", "time", "c", "z", "y", "zeta", "z_e",
    "spot_price", "pv", "lp_share_price", "exposure", "idle",
)


@dataclass
class Trajectory:
    records: list[dict[str, Any]] = field(default_factory=list)
    summary: list[dict[str, str]] = field(default_factory=list)
    fatal: str | None = None

    @property
    def violations(self) -> list[int]:
        return [r["index"] for r in self.records if not all(r["checks"].values())]

    def jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in self.records)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(self.summary)
        return buf.getvalue()


@functools.lru_cache(maxsize=None)
def _field_names(cls: type) -> tuple[str, ...]:
    return tuple(f.name for f in dataclasses.fields(cls))


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, FixedDecimal):
        return str(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    if dataclasses.is_dataclass(obj):
        out = {name: to_jsonable(getattr(obj, name)) for name in _field_names(type(obj))}
        if hasattr(obj, "total"):
            out["total"] = to_jsonable(obj.total)
        return out
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def build_engine(cfg: PoolConfig, sc: Scenario) -> Hyperdrive:
    return Hyperdrive(cfg, sc.rate, sc.share_price, sc.start_time, sc.eager_checkpoints)


def dispatch(engine: Hyperdrive, ev: ScenarioEvent) -> Any:
    """Run one event against the engine and return the engine's raw result."""
    a = ev.args
    k = ev.kind
    if k == "init":
        return engine.initialize(a.get("actor", "init"), a["contribution"], a["target_price"])
    if k == "advance_time":
        return engine.advance_time(a["seconds"])
    if k == "set_rate":
        return engine.set_rate(a["model"])
    if k == "mint_checkpoint":
        return engine.mint_checkpoint()
    if k == "open_long":
        return engine.open_long(a["actor"], a["base"])
    if k == "open_short":
        return engine.open_short(a["actor"], a["bonds"])
    if k in ("close_long", "close_short", "redeem_matured"):
        return getattr(engine, k)(a["actor"], a["receipt"])
    if k == "add_liquidity":
        return engine.add_liquidity(a["actor"], a["base"])
    if k == "remove_liquidity":
        return engine.remove_liquidity(a["actor"], a["lp_shares"])
    if k == "redeem_withdrawal_shares":
        return engine.redeem_withdrawal_shares(a["actor"], a["shares"])
    raise ValueError(f"unhandled event {k}")


def apply_event(engine: Hyperdrive, ev: ScenarioEvent) -> dict[str, Any]:
    """Like :func:`dispatch`, with the result converted to a JSON-ready dict."""
    k = ev.kind
    out = dispatch(engine, ev)
    if k in ("init", "add_liquidity"):
        return {"lp_shares": str(out)}
    if k == "advance_time":
        return {"share_prices": [[t, str(c)] for t, c in out]}
    if k == "set_rate":
        return {}
    if k == "mint_checkpoint":
        return {"checkpoint": out}
    if k in ("open_long", "open_short"):
        rid, res = out
        return {"receipt_id": rid, **to_jsonable(res)}
    if k == "redeem_withdrawal_shares":
        return {"base": str(out)}
    return to_jsonable(out)


def invariant_checks(engine: Hyperdrive) -> dict[str, bool]:
    s, cfg = engine.state, engine.cfg
    if not s.initialized:
        return {"solvent": True, "zeta_consistent": True, "zombie_backed": True}
    z_e = s.z - s.zeta
    # effective reserves positive and the spot price at most one
    zeta_ok = z_e > ZERO and s.y > ZERO and mul(s.mu, z_e) <= s.y
    zombie_ok = mul(s.z_zombie, s.c, UP) >= s.x_zombie
    return {"solvent": check_solvency(s, cfg), "zeta_consistent": bool(zeta_ok), "zombie_backed": bool(zombie_ok)}


def summary_row(engine: Hyperdrive, index: int, kind: str, ok: bool) -> dict[str, str]:
    s, cfg = engine.state, engine.cfg
    row = {
        "index": str(index), "event": kind, "ok": str(ok).lower(), "time": str(s.time), "c": str(s.c),
        "z": str(s.z), "y": str(s.y), "zeta": str(s.zeta), "z_e": str(s.z_e),
        "spot_price": "", "pv": "", "lp_share_price": "", "exposure": "", "idle": "",
    }
    if s.initialized:
        row["spot_price"] = str(curve.spot_price(s.reserves(), cfg.curve(s.mu)))
        row["pv"] = str(lp.present_value(s, cfg).pv)
        row["lp_share_price"] = str(lp.lp_share_price(s, cfg)) if s.l_total > ZERO else ""
        row["exposure"] = str(global_exposure(s, cfg))
        row["idle"] = str(idle_liquidity(s, cfg))
    return row


def run_scenario(cfg: PoolConfig, sc: Scenario, engine: Hyperdrive | None = None, observer=None) -> Trajectory:
    """Run every event in order. Failed events are recorded and leave the state untouched.

    ``observer(index, event, engine_before_state, result_or_None)`` is called after
    each event; the oracle uses it to recheck solves.
    """
    engine = engine or build_engine(cfg, sc)
    traj = Trajectory()
    for i, ev in enumerate(sc.events):
        before = engine.state.copy() if observer else None
        record: dict[str, Any] = {"index": i, "event": ev.to_json()}
        result = None
        try:
            result = apply_event(engine, ev)
            record["ok"] = True
            record["result"] = result
        except (HyperdriveError, ArithmeticError, ValueError) as exc:
            # ArithmeticError covers fixed-point overflow on absurd amounts
            record["ok"] = False
            record["error"] = {"type": type(exc).__name__, "message": str(exc)}
        except ConvergenceError as exc:
            traj.fatal = f"event {i}: {exc}"
            record["ok"] = False
            record["error"] = {"type": type(exc).__name__, "message": str(exc)}
        record["time"] = engine.state.time
        record["state"] = engine.snapshot()
        record["checks"] = invariant_checks(engine)
        traj.records.append(record)
        traj.summary.append(summary_row(engine, i, ev.kind, record["ok"]))
        if observer:
            observer(i, ev, before, engine, result)
        if traj.fatal:
            break
    return traj


def write_outputs(traj: Trajectory, out: Path, fmt: str = "both") -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("jsonl", "both"):
        p = out / "trajectory.jsonl"
        p.write_text(traj.jsonl(), encoding="utf-8")
        written.append(p)
    if fmt in ("csv", "both"):
        p = out / "summary.csv"
        p.write_text(traj.csv(), encoding="utf-8")
        written.append(p)
    return written
