import random

import pytest

from hyperdrive import checkpoints
from hyperdrive.fixedmath import FixedDecimal, fixed
from hyperdrive.state import PoolConfig, PoolState

DAY = 86_400
TERM = 30 * DAY


def dec(x: float, places: int = 12) -> FixedDecimal:
    return FixedDecimal(f"{x:.{places}f}")


def make_config(**kw) -> PoolConfig:
    base = dict(position_duration=TERM, d_c=DAY, sigma="0.5", z_min="0")
    base.update(kw)
    return PoolConfig(**base)


def make_pool(cfg: PoolConfig, z_e, y, *, zeta="0", c="1", mu="1", time=0, l_a=None) -> PoolState:
    """An initialized pool with the given curve reserves and no open positions."""
    z_e, y, zeta = fixed(z_e), fixed(y), fixed(zeta)
    s = PoolState(z=z_e + zeta, y=y, zeta=zeta, c=fixed(c), mu=fixed(mu), time=time)
    s.l_a = s.z - cfg.z_min if l_a is None else fixed(l_a)
    s.initialized = True
    s.maturity_cursor = time - time % cfg.d_c
    checkpoints.mint_checkpoint(s, cfg, s.maturity_cursor)
    return s


def random_pool(rng: random.Random, cfg: PoolConfig, *, time=0, zeta_frac=None) -> PoolState:
    """Random reserves with spot price in (0.5, 0.999)."""
    sigma = float(cfg.sigma)
    z_e = 10 ** rng.uniform(1, 6)
    p = rng.uniform(0.5, 0.999)
    mu = rng.uniform(1, 1.5)
    c = mu * rng.uniform(1, 1.5)
    y = mu * z_e / p ** (1 / sigma)
    zf = rng.uniform(-0.2, 0.8) if zeta_frac is None else zeta_frac
    return make_pool(cfg, dec(z_e), dec(y), zeta=dec(z_e * zf), c=dec(c), mu=dec(mu), time=time)


def long_base(rng: random.Random, s: PoolState, cfg: PoolConfig, lo: float = 0.01, hi: float = 0.5) -> FixedDecimal:
    """Base for a long that spends a random fraction of what the pool can sell before the price reaches one."""
    from hyperdrive.curve import max_buy

    _, shares = max_buy(s.reserves(), cfg.curve(s.mu))
    return dec(float(shares) * float(s.c) * rng.uniform(lo, hi))


def rel(a, b) -> float:
    a, b = float(a), float(b)
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else 0.0


# -- acceptance summary -----------------------------------------------------------

_criteria: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    outcome = "PASS" if report.passed else "FAIL"
    _criteria[number] = (title, outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report.criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, outcome = _criteria[number]
        terminalreporter.write_line(f"criterion {number:>2} {outcome}  {title}")


def random_engine(rng: random.Random, cfg: PoolConfig, n_trades: int = 8, short_bias: float = 0.5, max_frac: float = -0.7):
    """An engine with a random pool and a handful of trades spread over a few checkpoints."""
    from hyperdrive.engine import Hyperdrive
    from hyperdrive.errors import HyperdriveError
    from hyperdrive.yield_source import FixedRate

    e = Hyperdrive(cfg, FixedRate(dec(rng.uniform(0, 0.1), 6)), share_price=dec(rng.uniform(1, 1.5), 6))
    e.initialize("lp", dec(10 ** rng.uniform(3, 6), 6), dec(rng.uniform(0.9, 0.995), 6))
    for _ in range(n_trades):
        if rng.random() < 0.3:
            e.advance_time(rng.randint(1, 3 * cfg.d_c))
        s = e.state
        try:
            if rng.random() < short_bias:
                e.open_short("s", dec(float(s.y) * 10 ** rng.uniform(-3, max_frac)))
            else:
                e.open_long("l", dec(float(s.z * s.c) * 10 ** rng.uniform(-3, max_frac)))
        except HyperdriveError:
            pass
    return e


def queue_withdrawal(s: PoolState, fraction: float) -> PoolState:
    """Copy of ``s`` with ``fraction`` of the active LP shares moved to the withdrawal queue."""
    out = s.copy()
    q = FixedDecimal.from_raw(int(s.l_a.raw * fraction))
    out.l_a -= q
    out.l_w += q
    return out
