"""Simulated yield sources driving the share price ``c``.

Interest is simple within a segment and compounds at segment anchors:
checkpoint boundaries and the points where the rate changes. Because anchors
sit at fixed times, the share price at any instant does not depend on how the
caller chunks its calls to :meth:`YieldSource.advance`.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Union

from .fixedmath import SCALE, ZERO, FixedDecimal, fixed

SECONDS_PER_YEAR = 31_536_000


def accrue(c: FixedDecimal, apr: FixedDecimal, dt: int) -> FixedDecimal:
    """``c * (1 + apr * dt / year)``, rounded down."""
    if c <= ZERO:
        raise ValueError("share price must be positive")
    if apr < ZERO:
        raise ValueError("negative rates are not supported")
    if dt < 0:
        raise ValueError("negative time step")
    return FixedDecimal.from_raw(c.raw + c.raw * apr.raw * dt // (SCALE * SECONDS_PER_YEAR))


@dataclass(frozen=True)
class FixedRate:
    apr: FixedDecimal = ZERO

    def __post_init__(self):
        object.__setattr__(self, "apr", fixed(self.apr))
        if self.apr < ZERO:
            raise ValueError("negative rates are not supported")

    def apr_at(self, t: int) -> FixedDecimal:
        return self.apr

    def next_change(self, t: int) -> int | None:
        return None


@dataclass(frozen=True)
class PiecewiseRate:
    """``schedule`` is a sequence of ``(start_time, apr)``; the rate is 0 before the first start."""

    schedule: tuple[tuple[int, FixedDecimal], ...]

    def __post_init__(self):
        sched = tuple(sorted((int(t), fixed(a)) for t, a in self.schedule))
        if any(a < ZERO for _, a in sched):
            raise ValueError("negative rates are not supported")
        if len({t for t, _ in sched}) != len(sched):
            raise ValueError("duplicate schedule times")
        object.__setattr__(self, "schedule", sched)

    def apr_at(self, t: int) -> FixedDecimal:
        apr = ZERO
        for start, a in self.schedule:
            if start > t:
                break
            apr = a
        return apr

    def next_change(self, t: int) -> int | None:
        for start, _ in self.schedule:
            if start > t:
                return start
        return None


@dataclass(frozen=True)
class StochasticRate:
    """A seeded random walk of the rate, redrawn every ``step`` seconds and floored at 0.

    Draw ``k`` covers ``[origin + k*step, origin + (k+1)*step)``.
    """

    seed: int
    initial: FixedDecimal
    drift: FixedDecimal = ZERO
    volatility: FixedDecimal = ZERO
    step: int = 86_400
    origin: int = 0
    _path: list = field(default_factory=list, init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("initial", "drift", "volatility"):
            object.__setattr__(self, name, fixed(getattr(self, name)))
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.initial < ZERO or self.volatility < ZERO:
            raise ValueError("initial rate and volatility must be non-negative")
        object.__setattr__(self, "_rng", random.Random(self.seed))
        self._path.append(self.initial)

    def _draw(self, k: int) -> FixedDecimal:
        rng = self.__dict__["_rng"]
        dt_years = self.step / SECONDS_PER_YEAR
        while len(self._path) <= k:
            prev = float(self._path[-1])
            nxt = prev + float(self.drift) * dt_years + float(self.volatility) * math.sqrt(dt_years) * rng.gauss(0, 1)
            self._path.append(fixed(f"{max(nxt, 0.0):.12f}"))
        return self._path[k]

    def apr_at(self, t: int) -> FixedDecimal:
        return self._draw(max(t - self.origin, 0) // self.step)

    def next_change(self, t: int) -> int | None:
        if t < self.origin:
            return self.origin
        return self.origin + ((t - self.origin) // self.step + 1) * self.step


RateModel = Union[FixedRate, PiecewiseRate, StochasticRate]


class YieldSource:
    """Share price path of a rate model, anchored at checkpoint boundaries and rate changes."""

    def __init__(self, model: RateModel, d_c: int, c: FixedDecimal = FixedDecimal(1), time: int = 0):
        if d_c <= 0:
            raise ValueError("checkpoint duration must be positive")
        self.model = model
        self.d_c = d_c
        self.anchor_time = time
        self.anchor_c = fixed(c)
        self.time = time
        self.c = self.anchor_c

    def _next_anchor(self, t: int) -> int:
        boundary = (t // self.d_c + 1) * self.d_c
        change = self.model.next_change(t)
        return boundary if change is None else min(boundary, change)

    def _price_at(self, t: int) -> FixedDecimal:
        return accrue(self.anchor_c, self.model.apr_at(self.anchor_time), t - self.anchor_time)

    def advance(self, to_time: int) -> list[tuple[int, FixedDecimal]]:
        """Move to ``to_time``; returns ``(t, c)`` at each checkpoint boundary crossed and at the end."""
        if to_time < self.time:
            raise ValueError("cannot move backwards in time")
        out: list[tuple[int, FixedDecimal]] = []
        if to_time == self.time:
            return out
        while True:
            nxt = self._next_anchor(self.anchor_time)
            if nxt > to_time:
                break
            self.anchor_c = self._price_at(nxt)
            self.anchor_time = nxt
            if nxt % self.d_c == 0 and nxt > self.time:
                out.append((nxt, self.anchor_c))
        self.time = to_time
        self.c = self._price_at(to_time)
        if not out or out[-1][0] != to_time:
            out.append((to_time, self.c))
        return out

    def set_model(self, model: RateModel) -> None:
        """Switch rate model at the current time (the current time becomes an anchor)."""
        self.anchor_c = self.c
        self.anchor_time = self.time
        self.model = model


__all__ = [
    "FixedRate",
    "PiecewiseRate",
    "RateModel",
    "SECONDS_PER_YEAR",
    "StochasticRate",
    "YieldSource",
    "accrue",
]
