"""Run many random scenarios and report refused events and any solvency breach."""
import argparse
import random
import time

from hyperdrive.engine import Hyperdrive
from hyperdrive.errors import HyperdriveError
from hyperdrive.fixedmath import fixed
from hyperdrive.simcli.generate import GeneratorSettings, ScenarioGenerator
from hyperdrive.simcli.runner import dispatch
from hyperdrive.state import PoolConfig, check_solvency
from hyperdrive.yield_source import FixedRate


def run(seed: int, n_events: int) -> tuple[int, int]:
    rng = random.Random(seed)
    cfg = PoolConfig(
        position_duration=rng.choice((7, 30, 90)) * 86_400, d_c=86_400,
        sigma=f"{rng.uniform(0.1, 0.6):.4f}", z_min=f"{rng.uniform(0, 5):.4f}",
        phi_n=f"{rng.uniform(0, 0.1):.4f}", phi_m=f"{rng.uniform(0, 0.01):.4f}",
    )
    gen = ScenarioGenerator(cfg, seed, GeneratorSettings(target_price=f"{rng.uniform(0.85, 0.99):.4f}"))
    e = Hyperdrive(cfg, FixedRate(fixed(f"{rng.uniform(0, 0.1):.4f}")))
    dispatch(e, gen.init_event())
    refused = breaches = 0
    for _ in range(n_events - 1):
        try:
            dispatch(e, gen.next_event(e))
        except HyperdriveError:
            refused += 1
        breaches += not check_solvency(e.state, cfg)
    return refused, breaches


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--events", type=int, default=2_000)
    p.add_argument("--first-seed", type=int, default=0)
    args = p.parse_args()
    total_breaches = 0
    for seed in range(args.first_seed, args.first_seed + args.seeds):
        t0 = time.perf_counter()
        refused, breaches = run(seed, args.events)
        total_breaches += breaches
        print(f"seed {seed:4d}  refused {refused:6d}  breaches {breaches}  {time.perf_counter() - t0:6.1f}s")
    print("solvent throughout" if total_breaches == 0 else f"{total_breaches} solvency breaches")
    raise SystemExit(1 if total_breaches else 0)


if __name__ == "__main__":
    main()
