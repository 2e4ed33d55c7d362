"""Scenario files: a pool's starting conditions, a rate model and an event list.

Example::

    {
      "share_price": "1",
      "start_time": 0,
      "rate": {"kind": "fixed", "apr": "0.05"},
      "events": [
        {"type": "init", "actor": "lp", "contribution": "1000", "target_price": "0.95"},
        {"type": "open_long", "actor": "alice", "base": "10"},
        {"type": "advance_time", "seconds": 86400},
        {"type": "close_long", "actor": "alice", "receipt": "r1"}
      ]
    }

Decimals may be JSON strings or numbers; numbers are read from their
literal text, never through binary floats. Receipt ids are assigned in order
``r1, r2, ...`` to every open event.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from ..fixedmath import FixedDecimal, fixed
from ..state import PoolConfig
from ..yield_source import FixedRate, PiecewiseRate, RateModel, StochasticRate

EVENT_FIELDS: dict[str, dict[str, str]] = {
    "init": {"contribution": "decimal", "target_price": "decimal"},
    "advance_time": {"seconds": "int"},
    "set_rate": {"model": "rate"},
    "open_long": {"actor": "str", "base": "decimal"},
    "close_long": {"actor": "str", "receipt": "receipt"},
    "open_short": {"actor": "str", "bonds": "decimal"},
    "close_short": {"actor": "str", "receipt": "receipt"},
    "add_liquidity": {"actor": "str", "base": "decimal"},
    "remove_liquidity": {"actor": "str", "lp_shares": "decimal"},
    "redeem_withdrawal_shares": {"actor": "str", "shares": "decimal"},
    "redeem_matured": {"actor": "str", "receipt": "receipt"},
    "mint_checkpoint": {},
}
OPTIONAL_FIELDS = {"init": {"actor": "str"}}


class ScenarioError(ValueError):
    def __init__(self, message: str, position: str = ""):
        super().__init__(f"{position}: {message}" if position else message)
        self.position = position
        self.message = message


@dataclass(frozen=True)
class ScenarioEvent:
    kind: str
    args: dict[str, Any]

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"type": self.kind}
        for k, v in self.args.items():
            out[k] = rate_to_json(v) if k == "model" else (str(v) if isinstance(v, FixedDecimal) else v)
        return out


@dataclass
class Scenario:
    events: list[ScenarioEvent]
    rate: RateModel = field(default_factory=FixedRate)
    share_price: FixedDecimal = field(default_factory=lambda: fixed(1))
    start_time: int = 0
    eager_checkpoints: bool = False


def _decimal(value: Any, where: str) -> FixedDecimal:
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise ScenarioError(f"expected a decimal, got {value!r}", where)
    try:
        return fixed(str(value))
    except ValueError as exc:
        raise ScenarioError(str(exc), where) from None


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"expected an integer, got {value!r}", where)
    return value


def parse_rate(data: Any, where: str, seed: int = 0) -> RateModel:
    if not isinstance(data, dict) or "kind" not in data:
        raise ScenarioError("rate must be an object with a 'kind'", where)
    kind = data["kind"]
    try:
        if kind == "fixed":
            return FixedRate(_decimal(data.get("apr", "0"), f"{where}.apr"))
        if kind == "piecewise":
            sched = data.get("schedule")
            if not isinstance(sched, list) or not sched:
                raise ScenarioError("piecewise rate needs a non-empty schedule", where)
            pairs = []
            for i, item in enumerate(sched):
                if not isinstance(item, list) or len(item) != 2:
                    raise ScenarioError("schedule entries are [start_time, apr]", f"{where}.schedule[{i}]")
                pairs.append((_int(item[0], f"{where}.schedule[{i}]"), _decimal(item[1], f"{where}.schedule[{i}]")))
            return PiecewiseRate(tuple(pairs))
        if kind == "stochastic":
            return StochasticRate(
                seed=_int(data.get("seed", seed), f"{where}.seed"),
                initial=_decimal(data.get("initial", "0"), f"{where}.initial"),
                drift=_decimal(data.get("drift", "0"), f"{where}.drift"),
                volatility=_decimal(data.get("volatility", "0"), f"{where}.volatility"),
                step=_int(data.get("step", 86_400), f"{where}.step"),
                origin=_int(data.get("origin", 0), f"{where}.origin"),
            )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc), where) from None
    raise ScenarioError(f"unknown rate kind {kind!r}", where)


def rate_to_json(model: RateModel) -> dict[str, Any]:
    if isinstance(model, FixedRate):
        return {"kind": "fixed", "apr": str(model.apr)}
    if isinstance(model, PiecewiseRate):
        return {"kind": "piecewise", "schedule": [[t, str(a)] for t, a in model.schedule]}
    return {
        "kind": "stochastic",
        "seed": model.seed,
        "initial": str(model.initial),
        "drift": str(model.drift),
        "volatility": str(model.volatility),
        "step": model.step,
        "origin": model.origin,
    }


def parse_event(data: Any, index: int, seed: int = 0) -> ScenarioEvent:
    where = f"events[{index}]"
    if not isinstance(data, dict) or "type" not in data:
        raise ScenarioError("event must be an object with a 'type'", where)
    kind = data["type"]
    if kind not in EVENT_FIELDS:
        raise ScenarioError(f"unknown event type {kind!r}", where)
    spec = EVENT_FIELDS[kind]
    optional = OPTIONAL_FIELDS.get(kind, {})
    extra = set(data) - set(spec) - set(optional) - {"type"}
    if extra:
        raise ScenarioError(f"unexpected fields {sorted(extra)}", where)
    args: dict[str, Any] = {}
    for name, typ in {**spec, **optional}.items():
        if name not in data:
            if name in optional:
                continue
            raise ScenarioError(f"missing field {name!r}", where)
        value = data[name]
        at = f"{where}.{name}"
        if typ == "decimal":
            args[name] = _decimal(value, at)
        elif typ == "int":
            args[name] = _int(value, at)
            if args[name] < 0:
                raise ScenarioError("must be non-negative", at)
        elif typ == "rate":
            args[name] = parse_rate(value, at, seed)
        else:
            if not isinstance(value, str) or not value:
                raise ScenarioError("expected a non-empty string", at)
            args[name] = value
    return ScenarioEvent(kind, args)


def parse_scenario(data: Any, seed: int = 0) -> Scenario:
    """Validate a decoded scenario document. ``seed`` fills unseeded stochastic rates."""
    if isinstance(data, list):
        data = {"events": data}
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be an object")
    unknown = set(data) - {"events", "rate", "share_price", "start_time", "checkpoints"}
    if unknown:
        raise ScenarioError(f"unexpected fields {sorted(unknown)}")
    raw_events = data.get("events", [])
    if not isinstance(raw_events, list):
        raise ScenarioError("'events' must be a list")
    if not raw_events:
        raise ScenarioError("missing init", "events")
    events = [parse_event(e, i, seed) for i, e in enumerate(raw_events)]
    if events[0].kind != "init":
        raise ScenarioError("missing init: the first event must be init", "events[0]")
    issued = 0
    for i, ev in enumerate(events):
        if i > 0 and ev.kind == "init":
            raise ScenarioError("init may only appear once", f"events[{i}]")
        if ev.kind in ("open_long", "open_short"):
            issued += 1
        rid = ev.args.get("receipt")
        if rid is not None:
            n = rid[1:] if rid.startswith("r") else ""
            if not n.isdigit() or not 1 <= int(n) <= issued:
                raise ScenarioError(f"receipt {rid!r} does not refer to an earlier open", f"events[{i}].receipt")
    mode = data.get("checkpoints", "lazy")
    if mode not in ("lazy", "eager"):
        raise ScenarioError("checkpoints must be 'lazy' or 'eager'", "checkpoints")
    return Scenario(
        events=events,
        rate=parse_rate(data["rate"], "rate", seed) if "rate" in data else FixedRate(),
        share_price=_decimal(data.get("share_price", "1"), "share_price"),
        start_time=_int(data.get("start_time", 0), "start_time"),
        eager_checkpoints=mode == "eager",
    )


def loads_scenario(text: str, seed: int = 0) -> Scenario:
    try:
        data = json.loads(text, parse_float=str)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
    return parse_scenario(data, seed)


def loads_config(text: str) -> PoolConfig:
    try:
        data = json.loads(text, parse_float=str)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", f"config line {exc.lineno} column {exc.colno}") from None
    if not isinstance(data, dict):
        raise ScenarioError("config must be an object", "config")
    try:
        return PoolConfig.from_dict(data)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(str(exc), "config") from None


def scenario_to_json(sc: Scenario) -> dict[str, Any]:
    return {
        "share_price": str(sc.share_price),
        "start_time": sc.start_time,
        "rate": rate_to_json(sc.rate),
        "checkpoints": "eager" if sc.eager_checkpoints else "lazy",
        "events": [e.to_json() for e in sc.events],
    }
