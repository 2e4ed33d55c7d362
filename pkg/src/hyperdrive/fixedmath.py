"""Signed 18-decimal fixed-point arithmetic.

A :class:`FixedDecimal` is an integer scaled by ``10**18``. Addition and
subtraction are exact. Multiplication and division take an explicit rounding
direction: ``DOWN`` rounds toward negative infinity and ``UP`` toward positive
infinity, so for every pair of operands ``mul(a, b, DOWN) <= a*b <= mul(a, b, UP)``.

Transcendental functions (``exp``, ``ln``, ``pow``) are evaluated in 192-bit
binary floating point through MPFR and rounded back onto the decimal grid.
The same bridge (:func:`to_real` / :func:`from_real`) is used by the pricing
code, which evaluates whole formulas at high precision and rounds once.
"""
from __future__ import annotations

import enum
import functools
import re
from typing import Callable, TypeVar, Union

import gmpy2
from gmpy2 import mpfr

DECIMALS = 18
SCALE = 10**DECIMALS
MAX_RAW = 2**255  # int256 backing width

HP_PRECISION = 192
HP_CONTEXT = gmpy2.context(precision=HP_PRECISION)

# results within this many raw units of an integer are treated as exact; far
# below the 1e-12 relative budget of the transcendental functions
_SNAP = mpfr("1e-9", HP_PRECISION)

_NUMBER = re.compile(r"^(-)?(\d+)(?:\.(\d{1,18}))?$")

F = TypeVar("F", bound=Callable)


class Rounding(enum.Enum):
    DOWN = "down"
    UP = "up"


DOWN = Rounding.DOWN
UP = Rounding.UP


class FixedPointError(ArithmeticError):
    """Base class for fixed-point arithmetic failures."""


class FixedPointOverflow(FixedPointError, OverflowError):
    """Result does not fit the signed 256-bit backing integer."""


class DomainError(FixedPointError, ValueError):
    """Argument outside a function's domain (e.g. ``ln`` of a non-positive)."""


def _checked(raw: int) -> int:
    if -MAX_RAW <= raw < MAX_RAW:
        return raw
    raise FixedPointOverflow(f"fixed-point overflow: {raw}")


def _div_round(num: int, den: int, rounding: Rounding) -> int:
    if den == 0:
        raise ZeroDivisionError("fixed-point division by zero")
    if rounding is DOWN:
        return num // den
    return -((-num) // den)


class FixedDecimal:
    """An immutable signed decimal with 18 fractional digits.

    ``FixedDecimal("1.5")`` parses a decimal string, ``FixedDecimal(3)`` is the
    whole number 3, and :meth:`from_raw` wraps an already-scaled integer.
    The ``*`` and ``/`` operators round down; use :func:`mul` / :func:`div`
    when the direction matters.
    """

    __slots__ = ("raw",)

    raw: int

    def __init__(self, value: Union[int, str, "FixedDecimal"] = 0):
        if isinstance(value, FixedDecimal):
            raw = value.raw
        elif isinstance(value, bool):
            raise TypeError("bool is not a FixedDecimal value")
        elif isinstance(value, int):
            raw = value * SCALE
        elif isinstance(value, str):
            raw = _parse(value)
        else:
            raise TypeError(f"cannot build FixedDecimal from {type(value).__name__}")
        object.__setattr__(self, "raw", _checked(raw))

    @classmethod
    def from_raw(cls, raw: int) -> "FixedDecimal":
        if not -MAX_RAW <= raw < MAX_RAW:
            raise FixedPointOverflow(f"fixed-point overflow: {raw}")
        obj = _new(cls)
        _set_raw(obj, raw)
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("FixedDecimal is immutable")

    def __reduce__(self):
        return (FixedDecimal.from_raw, (self.raw,))

    # -- formatting -------------------------------------------------------

    def __str__(self) -> str:
        sign = "-" if self.raw < 0 else ""
        whole, frac = divmod(abs(self.raw), SCALE)
        return f"{sign}{whole}.{frac:018d}"

    def __repr__(self) -> str:
        return f"FixedDecimal('{self}')"

    def __float__(self) -> float:
        return self.raw / SCALE

    # -- comparisons --------------------------------------------------------

    def _other_raw(self, other) -> int:
        if type(other) is FixedDecimal:
            return other.raw
        if isinstance(other, int) and not isinstance(other, bool):
            return other * SCALE
        return NotImplemented

    def __eq__(self, other):
        raw = self._other_raw(other)
        if raw is NotImplemented:
            return NotImplemented
        return self.raw == raw

    def __hash__(self):
        return hash(("FixedDecimal", self.raw))

    def __lt__(self, other):
        raw = self._other_raw(other)
        return NotImplemented if raw is NotImplemented else self.raw < raw

    def __le__(self, other):
        raw = self._other_raw(other)
        return NotImplemented if raw is NotImplemented else self.raw <= raw

    def __gt__(self, other):
        raw = self._other_raw(other)
        return NotImplemented if raw is NotImplemented else self.raw > raw

    def __ge__(self, other):
        raw = self._other_raw(other)
        return NotImplemented if raw is NotImplemented else self.raw >= raw

    def __bool__(self) -> bool:
        return self.raw != 0

    # -- exact arithmetic -----------------------------------------------------

    def __add__(self, other):
        if type(other) is FixedDecimal:
            return FixedDecimal.from_raw(self.raw + other.raw)
        raw = self._other_raw(other)
        if raw is NotImplemented:
            return NotImplemented
        return FixedDecimal.from_raw(self.raw + raw)

    __radd__ = __add__

    def __sub__(self, other):
        if type(other) is FixedDecimal:
            return FixedDecimal.from_raw(self.raw - other.raw)
        raw = self._other_raw(other)
        if raw is NotImplemented:
            return NotImplemented
        return FixedDecimal.from_raw(self.raw - raw)

    def __rsub__(self, other):
        raw = self._other_raw(other)
        if raw is NotImplemented:
            return NotImplemented
        return FixedDecimal.from_raw(raw - self.raw)

    def __neg__(self):
        return FixedDecimal.from_raw(-self.raw)

    def __abs__(self):
        return FixedDecimal.from_raw(abs(self.raw))

    # -- rounded arithmetic -----------------------------------------------------

    def __mul__(self, other):
        if isinstance(other, int) and not isinstance(other, bool):
            return FixedDecimal.from_raw(self.raw * other)  # exact
        if isinstance(other, FixedDecimal):
            return mul(self, other, DOWN)
        return NotImplemented

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, FixedDecimal):
            return div(self, other, DOWN)
        return NotImplemented

    def mul(self, other: "FixedDecimal", rounding: Rounding = DOWN) -> "FixedDecimal":
        return mul(self, other, rounding)

    def div(self, other: "FixedDecimal", rounding: Rounding = DOWN) -> "FixedDecimal":
        return div(self, other, rounding)

    @property
    def real(self) -> mpfr:
        """High-precision binary value; call inside :func:`high_precision` code."""
        return mpfr(self.raw) / SCALE


_new = object.__new__
_set_raw = FixedDecimal.raw.__set__


def _parse(text: str) -> int:
    m = _NUMBER.match(text.strip())
    if m is None:
        raise ValueError(f"invalid fixed-point literal {text!r}")
    sign, whole, frac = m.groups()
    frac = (frac or "").ljust(DECIMALS, "0")
    raw = int(whole) * SCALE + int(frac)
    return -raw if sign else raw


ZERO = FixedDecimal.from_raw(0)
ONE = FixedDecimal.from_raw(SCALE)
ULP = FixedDecimal.from_raw(1)


def mul(a: FixedDecimal, b: FixedDecimal, rounding: Rounding = DOWN) -> FixedDecimal:
    """Product rounded in the given direction."""
    return FixedDecimal.from_raw(_div_round(a.raw * b.raw, SCALE, rounding))


def div(a: FixedDecimal, b: FixedDecimal, rounding: Rounding = DOWN) -> FixedDecimal:
    """Quotient rounded in the given direction. Raises ``ZeroDivisionError`` for ``b == 0``."""
    if b.raw == 0:
        raise ZeroDivisionError("fixed-point division by zero")
    return FixedDecimal.from_raw(_div_round(a.raw * SCALE, b.raw, rounding))


def mul_div(a: FixedDecimal, b: FixedDecimal, c: FixedDecimal, rounding: Rounding = DOWN) -> FixedDecimal:
    """``a * b / c`` with a single rounding."""
    if c.raw == 0:
        raise ZeroDivisionError("fixed-point division by zero")
    return FixedDecimal.from_raw(_div_round(a.raw * b.raw, c.raw, rounding))


# -- high-precision bridge ------------------------------------------------------


def high_precision(fn: F) -> F:
    """Run ``fn`` with the 192-bit MPFR context active."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with gmpy2.context(HP_CONTEXT):
            return fn(*args, **kwargs)

    return wrapper  # type: ignore[return-value]


def to_real(x: FixedDecimal) -> mpfr:
    with gmpy2.context(HP_CONTEXT):
        return mpfr(x.raw) / SCALE


def from_real(value, rounding: Rounding = DOWN) -> FixedDecimal:
    """Round a real (mpfr, int or exact string) onto the 18-decimal grid.

    Values that land within ``1e-9`` raw units of a grid point are snapped to
    it, so exact answers survive the binary round trip.
    """
    with gmpy2.context(HP_CONTEXT):
        scaled = mpfr(value) * SCALE
        if not gmpy2.is_finite(scaled):
            raise FixedPointOverflow(f"non-finite result {value}")
        nearest = gmpy2.rint(scaled)
        if abs(scaled - nearest) <= _SNAP:
            raw = int(nearest)
        elif rounding is DOWN:
            raw = int(gmpy2.floor(scaled))
        else:
            raw = int(gmpy2.ceil(scaled))
    return FixedDecimal.from_raw(raw)


def exp(x: FixedDecimal, rounding: Rounding = DOWN) -> FixedDecimal:
    with gmpy2.context(HP_CONTEXT):
        return from_real(gmpy2.exp(x.real), rounding)


def ln(x: FixedDecimal, rounding: Rounding = DOWN) -> FixedDecimal:
    if x.raw <= 0:
        raise DomainError(f"ln of non-positive value {x}")
    with gmpy2.context(HP_CONTEXT):
        return from_real(gmpy2.log(x.real), rounding)


def pow(base: FixedDecimal, exponent: FixedDecimal, rounding: Rounding = DOWN) -> FixedDecimal:
    """``base ** exponent`` for ``base > 0`` as ``exp(exponent * ln(base))``."""
    if base.raw <= 0:
        raise DomainError(f"pow requires a positive base, got {base}")
    if exponent.raw == 0:
        return ONE
    if exponent.raw == SCALE:
        return base
    with gmpy2.context(HP_CONTEXT):
        return from_real(gmpy2.exp(exponent.real * gmpy2.log(base.real)), rounding)


def fixed(value: Union[int, str, FixedDecimal]) -> FixedDecimal:
    """Shorthand constructor."""
    return value if isinstance(value, FixedDecimal) else FixedDecimal(value)
