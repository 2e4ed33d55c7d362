"""Random scenarios, generated against a live engine so most events are valid.

Sizes are drawn relative to the pool so that the generated trades range from
dust to amounts the pool must refuse; the refusals exercise rollback.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from ..engine import Hyperdrive
from ..errors import HyperdriveError
from ..fixedmath import ZERO, FixedDecimal
from ..state import Kind, PoolConfig
from ..yield_source import FixedRate, RateModel
from .runner import dispatch
from .scenario import Scenario, ScenarioEvent

ACTORS = ("alice", "bob", "carol", "dave")
LPS = ("lp", "erin", "frank")
MAX_OPEN_RECEIPTS = 200


@dataclass
class GeneratorSettings:
    contribution: str = "1000"
    target_price: str = "0.95"
    apr: str = "0.05"
    # relative weights of each event kind
    weights: tuple[tuple[str, int], ...] = (
        ("open_long", 18),
        ("open_short", 18),
        ("close_long", 10),
        ("close_short", 10),
        ("advance_time", 16),
        ("add_liquidity", 7),
        ("remove_liquidity", 7),
        ("redeem_withdrawal_shares", 5),
        ("redeem_matured", 5),
        ("mint_checkpoint", 2),
        ("set_rate", 2),
    )


def _dec(x: float) -> FixedDecimal:
    return FixedDecimal(f"{x:.12f}")


class ScenarioGenerator:
    def __init__(self, cfg: PoolConfig, seed: int, settings: GeneratorSettings | None = None):
        self.cfg = cfg
        self.rng = random.Random(seed)
        self.settings = settings or GeneratorSettings()
        kinds, weights = zip(*self.settings.weights)
        self._kinds = kinds
        self._weights = weights
        self._closing_weights = tuple(
            0 if k in ("open_long", "open_short") else w for k, w in self.settings.weights
        )

    def init_event(self) -> ScenarioEvent:
        st = self.settings
        return ScenarioEvent(
            "init", {"actor": "lp", "contribution": FixedDecimal(st.contribution), "target_price": FixedDecimal(st.target_price)}
        )

    def _size(self, scale: float) -> FixedDecimal:
        # log-uniform between 1e-5 and 2x of the scale
        frac = 10 ** self.rng.uniform(-5, 0.3)
        return max(_dec(scale * frac), FixedDecimal("0.000001"))

    def next_event(self, engine: Hyperdrive) -> ScenarioEvent:
        # lean towards closing once the book gets large
        weights = self._weights if len(engine.receipts) < MAX_OPEN_RECEIPTS else self._closing_weights
        for _ in range(20):
            kind = self.rng.choices(self._kinds, weights)[0]
            ev = self._build(kind, engine)
            if ev is not None:
                return ev
        return ScenarioEvent("advance_time", {"seconds": self.cfg.d_c})

    def _build(self, kind: str, engine: Hyperdrive) -> ScenarioEvent | None:
        rng, cfg, s = self.rng, self.cfg, engine.state
        base_scale = float(s.z) * float(s.c)
        if kind == "open_long":
            return ScenarioEvent(kind, {"actor": rng.choice(ACTORS), "base": self._size(base_scale / 4)})
        if kind == "open_short":
            return ScenarioEvent(kind, {"actor": rng.choice(ACTORS), "bonds": self._size(float(s.y) / 4)})
        if kind in ("close_long", "close_short", "redeem_matured"):
            want = {"close_long": Kind.LONG, "close_short": Kind.SHORT}.get(kind)
            # receipts iterate in issue order, so no sort is needed for determinism
            if kind == "redeem_matured":
                cutoff = s.time - cfg.position_duration
                held = [(rid, a) for rid, (a, r) in engine.receipts.items() if r.checkpoint_time <= cutoff]
            else:
                held = [(rid, a) for rid, (a, r) in engine.receipts.items() if r.kind is want]
            if not held:
                return None
            rid, actor = rng.choice(held)
            return ScenarioEvent(kind, {"actor": actor, "receipt": rid})
        if kind == "advance_time":
            # mostly short hops; sometimes a whole term
            choice = rng.random()
            if choice < 0.6:
                seconds = rng.randint(1, cfg.d_c)
            elif choice < 0.95:
                seconds = rng.randint(cfg.d_c, 5 * cfg.d_c)
            else:
                seconds = cfg.position_duration
            return ScenarioEvent(kind, {"seconds": seconds})
        if kind == "add_liquidity":
            # keep deposits meaningful even after heavy withdrawals
            scale = max(base_scale, float(self.settings.contribution)) / 5
            return ScenarioEvent(kind, {"actor": rng.choice(LPS), "base": self._size(scale)})
        if kind == "remove_liquidity":
            holders = sorted(a for a, acct in engine.accounts.items() if acct.lp_shares > ZERO)
            if not holders:
                return None
            actor = rng.choice(holders)
            held = engine.accounts[actor].lp_shares
            # withdraw at most a third of the active shares at once so the pool stays usable
            cap = float(s.l_a) / 3
            if float(held) <= cap and rng.random() < 0.3:
                amount = held
            else:
                amount = min(_dec(min(float(held), cap) * rng.uniform(0.02, 1)), held)
            return ScenarioEvent(kind, {"actor": actor, "lp_shares": amount})
        if kind == "redeem_withdrawal_shares":
            ready = sorted(a for a, acct in engine.accounts.items() if acct.ready_shares > ZERO)
            if not ready:
                return None
            actor = rng.choice(ready)
            return ScenarioEvent(kind, {"actor": actor, "shares": engine.accounts[actor].ready_shares})
        if kind == "mint_checkpoint":
            return ScenarioEvent(kind, {})
        if kind == "set_rate":
            return ScenarioEvent(kind, {"model": FixedRate(_dec(rng.uniform(0, 0.15)))})
        raise ValueError(kind)


def generate_scenario(
    cfg: PoolConfig,
    seed: int,
    n_events: int,
    settings: GeneratorSettings | None = None,
    rate: RateModel | None = None,
) -> Scenario:
    """A scenario of ``n_events`` events (including the init) for ``cfg``."""
    settings = settings or GeneratorSettings()
    rate = rate or FixedRate(FixedDecimal(settings.apr))
    gen = ScenarioGenerator(cfg, seed, settings)
    engine = Hyperdrive(cfg, rate)
    events = [gen.init_event()]
    dispatch(engine, events[0])
    while len(events) < n_events:
        ev = gen.next_event(engine)
        events.append(ev)
        try:
            dispatch(engine, ev)
        except (HyperdriveError, ArithmeticError, ValueError):
            pass  # refused events stay in the scenario
    return Scenario(events, rate=rate)


__all__ = ["GeneratorSettings", "ScenarioGenerator", "generate_scenario"]
