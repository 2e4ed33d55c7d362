"""Fixed-rate AMM pool with checkpointed maturities, LP withdrawal queue and simulator."""
from .engine import Hyperdrive
from .errors import ConvergenceError, HyperdriveError
from .fixedmath import DOWN, ONE, UP, ZERO, FixedDecimal, fixed
from .state import CheckpointRecord, Kind, PoolConfig, PoolState, PositionReceipt

__all__ = [
    "CheckpointRecord",
    "ConvergenceError",
    "DOWN",
    "FixedDecimal",
    "Hyperdrive",
    "HyperdriveError",
    "Kind",
    "ONE",
    "PoolConfig",
    "PoolState",
    "PositionReceipt",
    "UP",
    "ZERO",
    "fixed",
]
