"""Write a random pool config and scenario for ``hyperdrive-sim``.

    python3 scripts/gen_scenario.py --seed 3 --events 500 --out /tmp/run
    hyperdrive-sim simulate --config /tmp/run/config.json --scenario /tmp/run/scenario.json --out /tmp/run/out
"""
import argparse
import json
from pathlib import Path

from hyperdrive.fixedmath import fixed
from hyperdrive.simcli.generate import GeneratorSettings, generate_scenario
from hyperdrive.simcli.scenario import scenario_to_json
from hyperdrive.state import PoolConfig
from hyperdrive.yield_source import FixedRate, StochasticRate


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--events", type=int, default=200)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--term-days", type=int, default=30)
    p.add_argument("--sigma", default="0.3")
    p.add_argument("--target-price", default="0.95")
    p.add_argument("--apr", default="0.05")
    p.add_argument("--volatility", default="0", help="nonzero picks a stochastic rate")
    args = p.parse_args()

    cfg = PoolConfig(
        position_duration=args.term_days * 86_400, d_c=86_400, sigma=args.sigma,
        phi_n="0.05", phi_m="0.005", phi_g="0.1", z_min="1",
    )
    if fixed(args.volatility) > 0:
        rate = StochasticRate(args.seed, fixed(args.apr), volatility=fixed(args.volatility))
    else:
        rate = FixedRate(fixed(args.apr))
    settings = GeneratorSettings(target_price=args.target_price, apr=args.apr)
    sc = generate_scenario(cfg, args.seed, args.events, settings, rate)

    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    (args.out / "scenario.json").write_text(json.dumps(scenario_to_json(sc), indent=1) + "\n")
    print(args.out / "config.json")
    print(args.out / "scenario.json")


if __name__ == "__main__":
    main()
