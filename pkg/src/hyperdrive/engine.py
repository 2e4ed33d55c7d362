"""A single pool with actor accounts, driven by a yield source.

:class:`Hyperdrive` is the single writer over a :class:`PoolState`. Every
operation mints the current checkpoint first and runs atomically: if it fails
or would leave the pool insolvent, pool state and accounts are unchanged.

Withdrawal shares are served first come, first served. Whenever a
distribution marks shares ready they are assigned to the oldest queued
requests first.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

from . import checkpoints, lp, trading
from .errors import InsufficientShares, InvalidInput, UnknownReceipt
from .fixedmath import ONE, ZERO, FixedDecimal, fixed
from .state import Kind, PoolConfig, PoolState, PositionReceipt, transaction
from .yield_source import FixedRate, RateModel, YieldSource


@dataclass
class Account:
    lp_shares: FixedDecimal = ZERO
    withdrawal_shares: FixedDecimal = ZERO  # queued plus ready
    ready_shares: FixedDecimal = ZERO
    receipts: set = field(default_factory=set)


@dataclass
class Stats:
    fees_base: FixedDecimal = ZERO  # total fees charged to traders, in base
    governance_shares: FixedDecimal = ZERO
    trades: int = 0


class Hyperdrive:
    def __init__(
        self,
        cfg: PoolConfig,
        rate: RateModel | None = None,
        share_price: FixedDecimal = ONE,
        time: int = 0,
        eager_checkpoints: bool = False,
    ):
        self.cfg = cfg
        self.state = PoolState(c=fixed(share_price), time=time)
        self.source = YieldSource(rate or FixedRate(ZERO), cfg.d_c, fixed(share_price), time)
        self.eager_checkpoints = eager_checkpoints
        self.accounts: dict[str, Account] = {}
        self.receipts: dict[str, tuple[str, PositionReceipt]] = {}
        self.queue: deque[list] = deque()  # [actor, queued shares], oldest first
        self.redeemed_total = ZERO
        self.stats = Stats()
        self._next_receipt = 1

    # -- plumbing --------------------------------------------------------------

    def account(self, actor: str) -> Account:
        return self.accounts.setdefault(actor, Account())

    def _marked(self) -> FixedDecimal:
        return self.state.l_r + self.redeemed_total

    def _run(self, fn: Callable[[], Any]) -> Any:
        s = self.state
        with transaction(s, self.cfg):
            if s.initialized:
                checkpoints.mint_checkpoint(s, self.cfg, checkpoints.latest_checkpoint_time(s.time, self.cfg))
            return fn()

    def _assign_ready(self, amount: FixedDecimal) -> None:
        while amount > ZERO and self.queue:
            entry = self.queue[0]
            take = min(amount, entry[1])
            entry[1] -= take
            amount -= take
            self.account(entry[0]).ready_shares += take
            if entry[1] == ZERO:
                self.queue.popleft()

    def _queued(self) -> FixedDecimal:
        return sum((e[1] for e in self.queue), ZERO)

    def _new_receipt(self, actor: str, receipt: PositionReceipt) -> str:
        rid = f"r{self._next_receipt}"
        self._next_receipt += 1
        self.receipts[rid] = (actor, receipt)
        self.account(actor).receipts.add(rid)
        return rid

    def _owned(self, actor: str, rid: str, kind: Kind) -> PositionReceipt:
        entry = self.receipts.get(rid)
        if entry is None or entry[0] != actor:
            raise UnknownReceipt(f"{actor} holds no receipt {rid}")
        if entry[1].kind is not kind:
            raise InvalidInput(f"receipt {rid} is not a {kind.value}")
        return entry[1]

    def _consume(self, rid: str) -> None:
        actor, _ = self.receipts.pop(rid)
        self.account(actor).receipts.discard(rid)

    def _charge(self, fees_base: FixedDecimal, gov: FixedDecimal) -> None:
        self.stats.fees_base += fees_base
        self.stats.governance_shares += gov
        self.stats.trades += 1

    # -- time ----------------------------------------------------------------

    def advance_time(self, seconds: int) -> list[tuple[int, FixedDecimal]]:
        if seconds < 0:
            raise InvalidInput("cannot move backwards in time")
        s = self.state
        marked = self._marked()
        points = self.source.advance(s.time + seconds)
        for t, c in points:
            s.set_share_price(c)
            s.time = t
            if t % self.cfg.d_c == 0 and s.initialized:
                if self.eager_checkpoints:
                    checkpoints.mint_checkpoint(s, self.cfg, t)
                else:
                    checkpoints.record_boundary_price(s, t, c, self.cfg)
        self._assign_ready(self._marked() - marked)
        return points

    def set_rate(self, model: RateModel) -> None:
        self.source.set_model(model)

    def mint_checkpoint(self) -> int:
        marked = self._marked()
        t_c = checkpoints.latest_checkpoint_time(self.state.time, self.cfg)
        self._run(lambda: None)
        self._assign_ready(self._marked() - marked)
        return t_c

    # -- LP operations ---------------------------------------------------------

    def initialize(self, actor: str, contribution: FixedDecimal, target_price: FixedDecimal) -> FixedDecimal:
        shares = self._run(lambda: lp.initialize(self.state, self.cfg, fixed(contribution), fixed(target_price)))
        self.account(actor).lp_shares += shares
        return shares

    def add_liquidity(self, actor: str, base: FixedDecimal) -> FixedDecimal:
        marked = self._marked()
        shares = self._run(lambda: lp.add_liquidity(self.state, self.cfg, fixed(base)))
        self._assign_ready(self._marked() - marked)
        self.account(actor).lp_shares += shares
        return shares

    def remove_liquidity(self, actor: str, shares: FixedDecimal) -> lp.RemoveResult:
        shares = fixed(shares)
        acct = self.account(actor)
        if shares > acct.lp_shares:
            raise InsufficientShares(f"{actor} holds {acct.lp_shares} LP shares")
        marked = self._marked()
        ahead = self._queued()
        result = self._run(lambda: lp.remove_liquidity(self.state, self.cfg, shares, ahead))
        acct.lp_shares -= shares
        acct.withdrawal_shares += shares
        if shares > ZERO:
            self.queue.append([actor, shares])
        self.redeemed_total += result.redeemed
        self._assign_ready(self._marked() - marked)
        acct.ready_shares -= result.redeemed
        acct.withdrawal_shares -= result.redeemed
        return result

    def redeem_withdrawal_shares(self, actor: str, shares: FixedDecimal) -> FixedDecimal:
        shares = fixed(shares)
        acct = self.account(actor)
        if shares > acct.ready_shares:
            raise InsufficientShares(f"{actor} has {acct.ready_shares} ready withdrawal shares")
        marked = self._marked()
        base = self._run(lambda: lp.redeem_withdrawal_shares(self.state, self.cfg, shares))
        self.redeemed_total += shares
        self._assign_ready(self._marked() - marked)
        acct.ready_shares -= shares
        acct.withdrawal_shares -= shares
        return base

    # -- trading ---------------------------------------------------------------

    def _trade(self, fn: Callable[[], Any]) -> Any:
        marked = self._marked()
        result = self._run(fn)
        self._assign_ready(self._marked() - marked)
        return result

    def open_long(self, actor: str, base: FixedDecimal) -> tuple[str, trading.TradeResult]:
        result = self._trade(lambda: trading.open_long(self.state, self.cfg, fixed(base)))
        self._charge(result.fees.total, result.fees.governance_share)
        return self._new_receipt(actor, result.receipt), result

    def open_short(self, actor: str, bonds: FixedDecimal) -> tuple[str, trading.TradeResult]:
        result = self._trade(lambda: trading.open_short(self.state, self.cfg, fixed(bonds)))
        self._charge(result.fees.total, result.fees.governance_share)
        return self._new_receipt(actor, result.receipt), result

    def close_long(self, actor: str, rid: str):
        r = self._owned(actor, rid, Kind.LONG)
        result = self._trade(lambda: trading.close_long(self.state, self.cfg, r))
        self._consume(rid)
        self._charge_close(result)
        return result

    def close_short(self, actor: str, rid: str):
        r = self._owned(actor, rid, Kind.SHORT)
        result = self._trade(lambda: trading.close_short(self.state, self.cfg, r))
        self._consume(rid)
        self._charge_close(result)
        return result

    def redeem_matured(self, actor: str, rid: str) -> checkpoints.MaturedPayout:
        entry = self.receipts.get(rid)
        if entry is None or entry[0] != actor:
            raise UnknownReceipt(f"{actor} holds no receipt {rid}")
        result = self._trade(lambda: checkpoints.redeem_matured(self.state, self.cfg, entry[1]))
        self._consume(rid)
        self._charge_close(result)
        return result

    def _charge_close(self, result) -> None:
        if isinstance(result, checkpoints.MaturedPayout):
            self._charge(result.fee, result.governance_share)
        else:
            self._charge(result.fees.total, result.fees.governance_share)

    # -- views -----------------------------------------------------------------

    def receipt(self, rid: str) -> PositionReceipt:
        return self.receipts[rid][1]

    def snapshot(self) -> dict[str, str]:
        return self.state.snapshot(self.cfg)


__all__ = ["Account", "Hyperdrive", "Stats"]
