"""Pricing curve for new bonds.

The trading invariant is a constant power sum over effective share reserves
``z_e`` and bond reserves ``y``::

    k = (c / mu) * (mu * z_e) ** (1 - sigma) + y ** (1 - sigma)

It is analytically invertible, so every trade size is a closed-form solve.
The spot price (base per bond) is ``(mu * z_e / y) ** sigma``, the marginal
rate ``c * dz/dy`` along the curve.

Matured bonds are priced at face value (:func:`m_price`) and :func:`h_trade`
blends the two by the fraction of term remaining.

Public functions take and return :class:`FixedDecimal`. :class:`RealCurve` is
the 192-bit kernel the trading and LP code use to compose formulas with a
single final rounding.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from gmpy2 import mpfr

from .errors import CurveDomainError, InsufficientLiquidity
from .fixedmath import DOWN, ONE, UP, ZERO, FixedDecimal, from_real, high_precision

# tolerated overshoot (in units) past a liquidity boundary before rejecting
_BOUNDARY_SLACK = mpfr("1e-18")


class Direction(enum.Enum):
    BONDS_OUT = "bonds_out"  # trader buys bonds, pays shares
    BONDS_IN = "bonds_in"  # trader sells bonds, receives shares


@dataclass(frozen=True)
class CurveParams:
    sigma: FixedDecimal
    mu: FixedDecimal

    def __post_init__(self):
        if not ZERO < self.sigma < ONE:
            raise ValueError(f"sigma must lie in (0, 1), got {self.sigma}")
        if self.mu <= ZERO:
            raise ValueError(f"mu must be positive, got {self.mu}")


@dataclass(frozen=True)
class CurveReserves:
    z_e: FixedDecimal
    y: FixedDecimal
    c: FixedDecimal

    def __post_init__(self):
        if self.z_e <= ZERO or self.y <= ZERO or self.c <= ZERO:
            raise CurveDomainError(f"reserves must be positive: z_e={self.z_e} y={self.y} c={self.c}")


class RealCurve:
    """The invariant at 192-bit precision. Construct and use inside ``high_precision``."""

    __slots__ = ("z_e", "y", "c", "mu", "sigma", "a", "_k")

    def __init__(self, z_e: mpfr, y: mpfr, c: mpfr, mu: mpfr, sigma: mpfr):
        self.z_e = z_e
        self.y = y
        self.c = c
        self.mu = mu
        self.sigma = sigma
        self.a = 1 - sigma
        self._k = None

    @classmethod
    def of(cls, r: CurveReserves, p: CurveParams) -> "RealCurve":
        return cls(r.z_e.real, r.y.real, r.c.real, p.mu.real, p.sigma.real)

    def _share_term(self, z: mpfr) -> mpfr:
        return self.c / self.mu * (self.mu * z) ** self.a

    def _z_from_share_term(self, term: mpfr) -> mpfr:
        return (term * self.mu / self.c) ** (1 / self.a) / self.mu

    def k(self) -> mpfr:
        if self._k is None:
            self._k = self._share_term(self.z_e) + self.y ** self.a
        return self._k

    def spot_price(self) -> mpfr:
        return (self.mu * self.z_e / self.y) ** self.sigma

    def scaled(self, factor: mpfr) -> "RealCurve":
        out = RealCurve(self.z_e * factor, self.y * factor, self.c, self.mu, self.sigma)
        if self._k is not None:
            out._k = self._k * factor**self.a  # k is homogeneous of degree 1 - sigma
        return out

    def shares_in_for_bonds_out(self, dy: mpfr, check: bool = True) -> mpfr:
        if dy == 0:
            return mpfr(0)
        if check and dy > self.max_buy()[0] + _BOUNDARY_SLACK:
            raise InsufficientLiquidity(f"cannot buy {float(dy):.12g} bonds: beyond the price-one boundary")
        y_new = self.y - dy
        if y_new <= 0:
            raise InsufficientLiquidity("bond reserves exhausted")
        return self._z_from_share_term(self.k() - y_new ** self.a) - self.z_e

    def shares_out_for_bonds_in(self, dy: mpfr, z_floor: mpfr | None = None) -> mpfr:
        if dy == 0:
            return mpfr(0)
        rest = self.k() - (self.y + dy) ** self.a
        if rest <= 0:
            if z_floor is None:
                return self.z_e
            raise InsufficientLiquidity("share reserves exhausted")
        z_new = self._z_from_share_term(rest)
        if z_floor is not None and z_new < z_floor - _BOUNDARY_SLACK:
            raise InsufficientLiquidity(
                f"selling {float(dy):.12g} bonds pushes effective shares below {float(z_floor):.12g}"
            )
        return self.z_e - z_new

    def bonds_out_for_shares_in(self, dz: mpfr) -> mpfr:
        if dz == 0:
            return mpfr(0)
        z_new = self.z_e + dz
        rest = self.k() - self._share_term(z_new)
        if rest <= 0:
            raise InsufficientLiquidity("bond reserves exhausted")
        y_new = rest ** (1 / self.a)
        if self.mu * z_new > y_new * (1 + _BOUNDARY_SLACK):
            raise InsufficientLiquidity(f"paying {float(dz):.12g} shares pushes the spot price above one")
        return self.y - y_new

    def max_buy(self) -> tuple[mpfr, mpfr]:
        """(bonds, shares) that move the spot price to exactly one."""
        if self.mu * self.z_e >= self.y:
            return mpfr(0), mpfr(0)
        y_new = (self.k() / (self.c / self.mu + 1)) ** (1 / self.a)
        return self.y - y_new, y_new / self.mu - self.z_e

    def max_sell(self, z_floor: mpfr) -> tuple[mpfr, mpfr]:
        """(bonds, shares) that move effective share reserves down to ``z_floor``."""
        if z_floor >= self.z_e:
            return mpfr(0), mpfr(0)
        rest = self.k() - (self._share_term(z_floor) if z_floor > 0 else 0)
        return rest ** (1 / self.a) - self.y, self.z_e - z_floor


def _real_t(t_r: FixedDecimal) -> mpfr:
    if not ZERO <= t_r <= ONE:
        raise ValueError(f"time remaining must lie in [0, 1], got {t_r}")
    return t_r.real


@high_precision
def invariant_k(r: CurveReserves, p: CurveParams) -> FixedDecimal:
    return from_real(RealCurve.of(r, p).k(), DOWN)


@high_precision
def spot_price(r: CurveReserves, p: CurveParams) -> FixedDecimal:
    return from_real(RealCurve.of(r, p).spot_price(), DOWN)


@high_precision
def i_shares_in_given_bonds_out(dy: FixedDecimal, r: CurveReserves, p: CurveParams) -> FixedDecimal:
    """Shares a trader pays to take ``dy`` new bonds out. Rounds up."""
    if dy < ZERO:
        raise ValueError("negative trade size")
    return from_real(RealCurve.of(r, p).shares_in_for_bonds_out(dy.real), UP)


@high_precision
def i_shares_out_given_bonds_in(
    dy: FixedDecimal, r: CurveReserves, p: CurveParams, z_floor: FixedDecimal = ZERO
) -> FixedDecimal:
    """Shares a trader receives for selling ``dy`` new bonds. Rounds down."""
    if dy < ZERO:
        raise ValueError("negative trade size")
    return from_real(RealCurve.of(r, p).shares_out_for_bonds_in(dy.real, z_floor.real), DOWN)


@high_precision
def i_bonds_out_given_shares_in(dz: FixedDecimal, r: CurveReserves, p: CurveParams) -> FixedDecimal:
    """Bonds a trader receives for paying ``dz`` shares. Rounds down."""
    if dz < ZERO:
        raise ValueError("negative trade size")
    return from_real(RealCurve.of(r, p).bonds_out_for_shares_in(dz.real), DOWN)


def m_price(dy: FixedDecimal, c: FixedDecimal, rounding=DOWN) -> FixedDecimal:
    """Matured bonds at face value: ``dy / c`` shares."""
    if c <= ZERO:
        raise CurveDomainError(f"share price must be positive, got {c}")
    return dy.div(c, rounding)


@high_precision
def h_trade(
    dy: FixedDecimal, t_r: FixedDecimal, direction: Direction, r: CurveReserves, p: CurveParams
) -> FixedDecimal:
    """Share impact of ``dy`` bonds, ``t_r`` of which are still new.

    ``I(dy * t_r) + M(dy * (1 - t_r))``. Rounds against the trader: up for
    ``BONDS_OUT``, down for ``BONDS_IN``.
    """
    if dy < ZERO:
        raise ValueError("negative trade size")
    tr = _real_t(t_r)
    curve = RealCurve.of(r, p)
    new = dy.real * tr
    if direction is Direction.BONDS_OUT:
        shares = curve.shares_in_for_bonds_out(new)
        rounding = UP
    else:
        shares = curve.shares_out_for_bonds_in(new, mpfr(0))
        rounding = DOWN
    return from_real(shares + dy.real * (1 - tr) / curve.c, rounding)


@high_precision
def max_buy(r: CurveReserves, p: CurveParams) -> tuple[FixedDecimal, FixedDecimal]:
    bonds, shares = RealCurve.of(r, p).max_buy()
    return from_real(bonds, DOWN), from_real(shares, DOWN)


@high_precision
def max_sell(r: CurveReserves, p: CurveParams, z_floor: FixedDecimal) -> tuple[FixedDecimal, FixedDecimal]:
    if z_floor >= r.z_e:
        return ZERO, ZERO
    bonds, _ = RealCurve.of(r, p).max_sell(z_floor.real)
    return from_real(bonds, DOWN), r.z_e - z_floor


__all__ = [
    "CurveParams",
    "CurveReserves",
    "Direction",
    "RealCurve",
    "h_trade",
    "i_bonds_out_given_shares_in",
    "i_shares_in_given_bonds_out",
    "i_shares_out_given_bonds_in",
    "invariant_k",
    "m_price",
    "max_buy",
    "max_sell",
    "spot_price",
]
