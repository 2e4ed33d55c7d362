"""Exception hierarchy. Every recoverable engine failure is a ``HyperdriveError``."""


class HyperdriveError(Exception):
    """An operation was rejected; pool state is unchanged."""


class InvalidInput(HyperdriveError, ValueError):
    pass


class CurveDomainError(HyperdriveError, ValueError):
    """Non-positive reserves handed to the pricing curve."""


class InsufficientLiquidity(HyperdriveError):
    pass


class SolvencyViolation(HyperdriveError):
    pass


class NotInitialized(HyperdriveError):
    pass


class AlreadyInitialized(HyperdriveError):
    pass


class UnknownReceipt(HyperdriveError, KeyError):
    pass


class InsufficientShares(HyperdriveError):
    pass


class NegativeProceeds(HyperdriveError):
    """Fees or price movement would leave a closing trader owing the pool."""


class CheckpointError(HyperdriveError):
    pass


class ConvergenceError(RuntimeError):
    """Root finding failed even after the bisection fallback (invariant breach)."""
