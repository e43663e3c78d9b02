"""
Short Weierstrass curves y^2 = x^3 + ax + b over Q and Q_p.

Coefficients are always rationals; the base field of a curve is Q when
``prime`` is None and Q_p (at ``precision`` digits) otherwise. Point
coordinates are Fractions over Q and PadicNumbers over Q_p.
"""

import logging
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Dict, List, Optional, Tuple, Union

from sympy import Poly, QQ, Rational, symbols

from padic_core import (
    DEFAULT_PRECISION,
    PadicNumber,
    PrecisionError,
    check_prime,
    is_square,
    parse_padic,
    qp_roots,
    sqrt,
    to_padic,
)

logger = logging.getLogger(__name__)

X = symbols("x")
FieldElement = Union[Fraction, PadicNumber]

# Division polynomials are only tabulated this far
MAX_DIVISION_INDEX = 9
TORSION_PRIMES = (2, 3, 5, 7)
# root-search budget for torsion scans (ψ_p can be very degenerate mod p)
TORSION_ROOT_CANDIDATES = 4000


class CurveError(Exception):
    """Base exception for elliptic-curve failures"""
    exit_code = 2

    def __init__(self, message: str, curve: Optional["WeierstrassCurve"] = None):
        self.message = message
        self.curve = curve
        super().__init__(self.message)


class SingularCurveError(CurveError):
    """Raised when the discriminant vanishes"""


class NotInE0Error(CurveError):
    """Raised when a point cannot be certified to lie off E[2]"""


def is_zero(value: FieldElement) -> bool:
    if isinstance(value, PadicNumber):
        return value.is_zero()
    return value == 0


@dataclass(frozen=True)
class CurvePoint:
    """Affine point (x, y) or the point at infinity (x is None)."""
    x: Optional[FieldElement] = None
    y: Optional[FieldElement] = None

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def __str__(self):
        if self.is_infinity:
            return "inf"
        return f"({self.x}, {self.y})"


INFINITY_POINT = CurvePoint()


@dataclass(frozen=True)
class WeierstrassCurve:
    """
    The curve y^2 = x^3 + ax + b.

    Raises:
        SingularCurveError: 4a^3 + 27b^2 = 0
    """
    a: Fraction
    b: Fraction
    prime: Optional[int] = None
    precision: int = DEFAULT_PRECISION

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if self.prime is not None:
            check_prime(self.prime)
        if 4 * self.a ** 3 + 27 * self.b ** 2 == 0:
            raise SingularCurveError(f"{self} is singular (discriminant 0)", self)

    @property
    def discriminant(self) -> Fraction:
        return -16 * (4 * self.a ** 3 + 27 * self.b ** 2)

    @property
    def j_invariant(self) -> Fraction:
        return 1728 * 4 * self.a ** 3 / (4 * self.a ** 3 + 27 * self.b ** 2)

    @property
    def is_padic(self) -> bool:
        return self.prime is not None

    def over(self, prime: int, precision: Optional[int] = None) -> "WeierstrassCurve":
        """The same equation over Q_prime."""
        return WeierstrassCurve(self.a, self.b, prime, precision or self.precision)

    def rational(self) -> "WeierstrassCurve":
        return WeierstrassCurve(self.a, self.b)

    def element(self, value) -> FieldElement:
        """Coerce value into the base field."""
        if isinstance(value, PadicNumber):
            if not self.is_padic:
                raise CurveError("p-adic coordinate on a curve over Q", self)
            return value
        if self.is_padic:
            return to_padic(Fraction(value), self.prime, self.precision)
        return Fraction(value)

    def f(self, x: FieldElement) -> FieldElement:
        return x * x * x + self.a * x + self.b

    def contains(self, point: CurvePoint) -> bool:
        if point.is_infinity:
            return True
        return point.y * point.y == self.f(point.x)

    def point(self, x, y) -> CurvePoint:
        """Build an affine point, checking the curve equation."""
        candidate = CurvePoint(self.element(x), self.element(y))
        if not self.contains(candidate):
            raise CurveError(f"{candidate} is not on {self}", self)
        return candidate

    def lift_x(self, x) -> Optional[CurvePoint]:
        """A point with abscissa x, or None when f(x) is not a square."""
        x = self.element(x)
        fx = self.f(x)
        if isinstance(fx, PadicNumber):
            if fx.is_exact_zero():
                return CurvePoint(x, fx)
            if fx.is_zero() or not is_square(fx):
                return None
            return CurvePoint(x, sqrt(fx))
        root = rational_sqrt(fx)
        return None if root is None else CurvePoint(x, root)

    def literal(self) -> str:
        return f"a={self.a} b={self.b}"

    def __str__(self):
        text = f"y^2 = x^3 + ({self.a})x + ({self.b})"
        return text if self.prime is None else f"{text} over Q_{self.prime}"


def rational_sqrt(q: Fraction) -> Optional[Fraction]:
    if q < 0:
        return None
    num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


_CURVE_LITERAL = re.compile(r"^\s*a\s*=\s*(?P<a>[+-]?\d+(?:/\d+)?)\s*,?\s*b\s*=\s*(?P<b>[+-]?\d+(?:/\d+)?)\s*$")


def parse_curve(text: str, prime: Optional[int] = None, precision: int = DEFAULT_PRECISION) -> WeierstrassCurve:
    """Parse the literal ``a=<rat> b=<rat>``."""
    match = _CURVE_LITERAL.match(text)
    if not match:
        raise CurveError(f"invalid curve literal: {text!r} (expected 'a=<rat> b=<rat>')")
    return WeierstrassCurve(Fraction(match.group("a")), Fraction(match.group("b")), prime, precision)


def parse_point(text: str, curve: WeierstrassCurve) -> CurvePoint:
    """Parse ``(x, y)`` with rational or p-adic literals; ``inf`` is the identity."""
    text = text.strip()
    if text == "inf":
        return INFINITY_POINT
    if not (text.startswith("(") and text.endswith(")")) or text.count(",") != 1:
        raise CurveError(f"invalid point literal: {text!r}", curve)
    coordinates = []
    for part in text[1:-1].split(","):
        part = part.strip()
        if "O(" in part:
            if not curve.is_padic:
                raise CurveError("p-adic literal for a curve over Q", curve)
            coordinates.append(parse_padic(part, curve.prime, curve.precision))
        else:
            coordinates.append(Fraction(part))
    return curve.point(*coordinates)


# -- group law --------------------------------------------------------------

def point_neg(curve: WeierstrassCurve, point: CurvePoint) -> CurvePoint:
    if point.is_infinity:
        return point
    return CurvePoint(point.x, -point.y)


def point_add(curve: WeierstrassCurve, first: CurvePoint, second: CurvePoint) -> CurvePoint:
    """
    Chord-tangent addition.

    Raises:
        PrecisionError: the abscissae agree at precision but the ordinates
            are neither equal nor opposite
    """
    if first.is_infinity:
        return second
    if second.is_infinity:
        return first
    dx = second.x - first.x
    if is_zero(dx):
        if is_zero(first.y + second.y):
            return INFINITY_POINT
        if not is_zero(first.y - second.y):
            raise PrecisionError("cannot tell P + Q from 2P at the available precision", curve.prime)
        slope = (3 * first.x * first.x + curve.a) / (2 * first.y)
    else:
        slope = (second.y - first.y) / dx
    x3 = slope * slope - first.x - second.x
    y3 = slope * (first.x - x3) - first.y
    return CurvePoint(x3, y3)


def scalar_mul(curve: WeierstrassCurve, n: int, point: CurvePoint) -> CurvePoint:
    """n * point by double-and-add."""
    if n < 0:
        return scalar_mul(curve, -n, point_neg(curve, point))
    result = INFINITY_POINT
    for bit in bin(n)[2:]:
        result = point_add(curve, result, result)
        if bit == "1":
            result = point_add(curve, result, point)
    return result


def point_precision(point: CurvePoint) -> Union[int, float]:
    """Smallest absolute precision among p-adic coordinates (inf for exact points)."""
    if point.is_infinity:
        return math.inf
    return min((c.absolute_precision for c in (point.x, point.y) if isinstance(c, PadicNumber)),
               default=math.inf)


def is_in_E0(curve: WeierstrassCurve, point: CurvePoint) -> bool:
    """
    True iff point lies off E[2] (the complement of the 2-torsion).

    Raises:
        NotInE0Error: y is indistinguishable from zero at precision
    """
    if point.is_infinity:
        return False
    y = point.y
    if isinstance(y, PadicNumber):
        if y.is_exact_zero():
            return False
        if y.is_zero():
            raise NotInE0Error(f"y-coordinate of {point} is zero at precision", curve)
        return True
    return y != 0


# -- twists -----------------------------------------------------------------

def quadratic_twist(curve: WeierstrassCurve, c) -> WeierstrassCurve:
    """Short model y^2 = x^3 + c^2 a x + c^3 b of the twist c y^2 = f(x)."""
    c = Fraction(c)
    if c == 0:
        raise CurveError("twist parameter must be nonzero", curve)
    return WeierstrassCurve(c * c * curve.a, c ** 3 * curve.b, curve.prime, curve.precision)


@dataclass(frozen=True)
class TwistedModel:
    """The model c y^2 = f(x) of the quadratic twist E^c."""
    curve: WeierstrassCurve
    c: Fraction

    def __post_init__(self):
        object.__setattr__(self, "c", Fraction(self.c))
        if self.c == 0:
            raise CurveError("twist parameter must be nonzero", self.curve)

    @cached_property
    def short_model(self) -> WeierstrassCurve:
        return quadratic_twist(self.curve, self.c)

    def contains(self, point: CurvePoint) -> bool:
        if point.is_infinity:
            return True
        return self.c * point.y * point.y == self.curve.f(point.x)

    def point(self, x, y) -> CurvePoint:
        candidate = CurvePoint(self.curve.element(x), self.curve.element(y))
        if not self.contains(candidate):
            raise CurveError(f"{candidate} is not on {self}", self.curve)
        return candidate

    def to_short(self, point: CurvePoint) -> CurvePoint:
        if point.is_infinity:
            return point
        return CurvePoint(point.x * self.c, point.y * self.c * self.c)

    def from_short(self, point: CurvePoint) -> CurvePoint:
        if point.is_infinity:
            return point
        return CurvePoint(point.x / self.c, point.y / (self.c * self.c))

    def add(self, first: CurvePoint, second: CurvePoint) -> CurvePoint:
        short = self.short_model
        return self.from_short(point_add(short, self.to_short(first), self.to_short(second)))

    def negate(self, point: CurvePoint) -> CurvePoint:
        return point_neg(self.curve, point)

    def multiply(self, n: int, point: CurvePoint) -> CurvePoint:
        return self.from_short(scalar_mul(self.short_model, n, self.to_short(point)))

    def __str__(self):
        return f"({self.c})y^2 = x^3 + ({self.curve.a})x + ({self.curve.b})"


@dataclass(frozen=True)
class TwistIsomorphism:
    """
    The Q_p-isomorphism (x, y) -> (x, alpha*y) from c y^2 = f(x) to
    d y^2 = f(x), with alpha = 1/sqrt(d/c).

    Raises:
        NotSquareError: d/c is not a square in Q_p
    """
    source: object
    target: object
    prime: int
    precision: int = DEFAULT_PRECISION

    @cached_property
    def alpha(self) -> FieldElement:
        source, target = self.source, self.target
        if not isinstance(source, PadicNumber) and not isinstance(target, PadicNumber) \
                and Fraction(source) == Fraction(target):
            return Fraction(1)
        ratio = to_padic(target, self.prime, self.precision) / to_padic(source, self.prime, self.precision)
        return sqrt(ratio).inverse()

    def forward(self, point: CurvePoint) -> CurvePoint:
        if point.is_infinity:
            return point
        return CurvePoint(point.x, point.y * self.alpha)

    def backward(self, point: CurvePoint) -> CurvePoint:
        if point.is_infinity:
            return point
        return CurvePoint(point.x, point.y / self.alpha)


def twist_transport(point: CurvePoint, c, d, prime: int, precision: int = DEFAULT_PRECISION) -> CurvePoint:
    """Move a point of c y^2 = f(x) to d y^2 = f(x) over Q_prime."""
    return TwistIsomorphism(c, d, prime, precision).forward(point)


# -- division polynomials ---------------------------------------------------

@lru_cache(maxsize=64)
def _h_sequence(a: Fraction, b: Fraction, top: int) -> Tuple[Poly, ...]:
    """h_0..h_top with psi_n = h_n (n odd) and psi_n = 2y h_n (n even)."""
    A = Rational(a.numerator, a.denominator)
    B = Rational(b.numerator, b.denominator)
    F = Poly(4 * (X ** 3 + A * X + B), X, domain=QQ)
    h: Dict[int, Poly] = {
        0: Poly(0, X, domain=QQ),
        1: Poly(1, X, domain=QQ),
        2: Poly(1, X, domain=QQ),
        3: Poly(3 * X ** 4 + 6 * A * X ** 2 + 12 * B * X - A ** 2, X, domain=QQ),
        4: Poly(2 * (X ** 6 + 5 * A * X ** 4 + 20 * B * X ** 3 - 5 * A ** 2 * X ** 2
                     - 4 * A * B * X - 8 * B ** 2 - A ** 3), X, domain=QQ),
    }
    for n in range(5, top + 1):
        m = n // 2
        if n % 2:
            if m % 2 == 0:
                h[n] = F ** 2 * h[m + 2] * h[m] ** 3 - h[m - 1] * h[m + 1] ** 3
            else:
                h[n] = h[m + 2] * h[m] ** 3 - F ** 2 * h[m - 1] * h[m + 1] ** 3
        else:
            h[n] = h[m] * (h[m + 2] * h[m - 1] ** 2 - h[m - 2] * h[m + 1] ** 2)
    return tuple(h[i] for i in range(top + 1))


def _check_index(n: int) -> None:
    if not 2 <= n <= MAX_DIVISION_INDEX:
        raise CurveError(f"division polynomial index must lie in [2, {MAX_DIVISION_INDEX}], got {n}")


def division_polynomial(curve: WeierstrassCurve, n: int) -> Poly:
    """
    Polynomial in x whose roots are exactly the abscissae of the nontrivial
    n-torsion points: psi_n for odd n, f * psi_n / (2y) for even n.
    """
    _check_index(n)
    h = _h_sequence(curve.a, curve.b, max(n, 4))[n]
    if n % 2:
        return h
    return h * Poly(X ** 3 + Rational(curve.a.numerator, curve.a.denominator) * X
                    + Rational(curve.b.numerator, curve.b.denominator), X, domain=QQ)


def division_polynomial_squared(curve: WeierstrassCurve, n: int) -> Poly:
    """psi_n^2 as a polynomial in x (psi_2^2 = 4f)."""
    _check_index(n)
    h = _h_sequence(curve.a, curve.b, max(n, 4))[n]
    if n % 2:
        return h ** 2
    F = Poly(4 * (X ** 3 + Rational(curve.a.numerator, curve.a.denominator) * X
                  + Rational(curve.b.numerator, curve.b.denominator)), X, domain=QQ)
    return F * h ** 2


def poly_coefficients(poly: Poly) -> List[Fraction]:
    """Coefficients of a QQ polynomial, constant term first."""
    coefficients = []
    for c in reversed(poly.all_coeffs()):
        r = Rational(c)
        coefficients.append(Fraction(int(r.p), int(r.q)))
    return coefficients


def cubic_coefficients(curve: WeierstrassCurve) -> List[Fraction]:
    return [curve.b, curve.a, Fraction(0), Fraction(1)]


def torsion_abscissae(curve: WeierstrassCurve, ell: int) -> List[PadicNumber]:
    """Q_p-rational abscissae of points of exact order ell (ell prime, or 4)."""
    if not curve.is_padic:
        raise CurveError("torsion scans need a p-adic base", curve)
    precision = min(curve.precision, 16)
    if ell == 2:
        return qp_roots(cubic_coefficients(curve), curve.prime, precision, TORSION_ROOT_CANDIDATES)
    abscissae = []
    for x in qp_roots(poly_coefficients(_h_sequence(curve.a, curve.b, max(ell, 4))[ell]),
                      curve.prime, precision, TORSION_ROOT_CANDIDATES):
        fx = curve.f(x)
        if fx.is_zero():
            raise PrecisionError(f"f vanishes at precision at the {ell}-division root {x}", curve.prime)
        if is_square(fx):
            abscissae.append(x)
    return abscissae


def has_qp_torsion(curve: WeierstrassCurve, ell: int) -> bool:
    """
    Whether E(Q_p) has a point of order ell, for ell in {2, 3, 5, 7}.

    Raises:
        CurveError: ell out of range or curve not p-adic
        RootSeparationError: the division polynomial's roots do not separate
    """
    if ell not in TORSION_PRIMES:
        raise CurveError(f"torsion scan supports ell in {TORSION_PRIMES}, got {ell}", curve)
    found = bool(torsion_abscissae(curve, ell))
    logger.debug("%s: %d-torsion over Q_%d: %s", curve, ell, curve.prime, found)
    return found
