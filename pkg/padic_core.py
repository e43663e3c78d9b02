"""
Truncated p-adic arithmetic.

A PadicNumber stores ``unit * p^valuation`` known modulo
``p^(valuation + rel_precision)``. Zero values carry their absolute precision
in ``valuation``; the exact zero uses ``INFINITY``.
"""

import logging
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import count
from typing import List, Optional, Sequence, Union

from sympy import isprime
from sympy.ntheory import legendre_symbol, sqrt_mod

logger = logging.getLogger(__name__)

DEFAULT_PRECISION = 24
INFINITY = math.inf

# Hensel root search never refines residues deeper than precision + this
ROOT_SEARCH_SLACK = 12
MAX_ROOT_CANDIDATES = 20000

Rational = Union[int, Fraction]


class PadicError(Exception):
    """Base exception for p-adic arithmetic failures"""
    exit_code = 2

    def __init__(self, message: str, prime: Optional[int] = None):
        self.message = message
        self.prime = prime
        super().__init__(self.message)


class PrecisionError(PadicError):
    """Raised when a result would be known to zero digits"""
    exit_code = 4


class NotSquareError(PadicError):
    """Raised when a square root is requested of a non-square"""


class RootSeparationError(PrecisionError):
    """Raised when Hensel lifting cannot separate roots within the budget"""

    def __init__(self, message: str, prime: Optional[int] = None, level: int = 0):
        self.level = level
        super().__init__(message, prime)


def int_valuation(n: int, p: int) -> Union[int, float]:
    """Exponent of p in the integer n (INFINITY for 0)."""
    if n == 0:
        return INFINITY
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def rational_valuation(q: Rational, p: int) -> Union[int, float]:
    q = Fraction(q)
    if q == 0:
        return INFINITY
    return int_valuation(q.numerator, p) - int_valuation(q.denominator, p)


def check_prime(p: int) -> None:
    if not isinstance(p, int) or p < 2 or not isprime(p):
        raise PadicError(f"{p} is not a prime number", p)


@dataclass(frozen=True, eq=False)
class PadicNumber:
    """An element of Q_p at finite absolute precision."""
    prime: int
    valuation: Union[int, float]
    unit: int
    rel_precision: int

    def __post_init__(self):
        if self.unit == 0:
            if self.rel_precision != 0:
                raise PadicError("zero values carry no relative precision", self.prime)
        elif self.unit % self.prime == 0 or self.rel_precision <= 0:
            raise PadicError("unit part must be coprime to the prime", self.prime)

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, prime: int, absolute_precision: Union[int, float] = INFINITY) -> "PadicNumber":
        return cls(prime, absolute_precision, 0, 0)

    @classmethod
    def from_fraction(cls, q: Rational, prime: int, precision: int = DEFAULT_PRECISION) -> "PadicNumber":
        q = Fraction(q)
        return from_rational(q.numerator, q.denominator, prime, precision)

    @classmethod
    def from_integer(cls, n: int, prime: int, absolute_precision: int) -> "PadicNumber":
        """The integer n known modulo p^absolute_precision."""
        return _normalize(prime, n, 0, absolute_precision)

    # -- inspection -----------------------------------------------------

    @property
    def absolute_precision(self) -> Union[int, float]:
        return self.valuation + self.rel_precision

    def is_zero(self) -> bool:
        return self.unit == 0

    def is_exact_zero(self) -> bool:
        return self.unit == 0 and self.valuation == INFINITY

    def is_integral(self) -> bool:
        return self.valuation >= 0

    def residue(self) -> int:
        """Image in F_p of an integral element."""
        return self.to_integer(1)

    def to_integer(self, digits: int) -> int:
        """Integer r in [0, p^digits) with x = r mod p^digits."""
        if self.valuation < 0:
            raise PadicError(f"{self} is not integral", self.prime)
        if self.absolute_precision < digits:
            raise PrecisionError(
                f"{self} is known to {self.absolute_precision} digits, {digits} requested", self.prime)
        if self.is_zero() or self.valuation >= digits:
            return 0
        return (self.unit * self.prime ** self.valuation) % self.prime ** digits

    def truncate(self, digits: int) -> Fraction:
        """Rational r with v(x - r) >= digits and p-power denominator."""
        if self.absolute_precision < digits:
            raise PrecisionError(
                f"cannot truncate {self} at p^{digits}: only {self.absolute_precision} digits known",
                self.prime)
        if self.is_zero() or self.valuation >= digits:
            return Fraction(0)
        u = self.unit % self.prime ** (digits - self.valuation)
        if u > self.prime ** (digits - self.valuation) // 2:
            u -= self.prime ** (digits - self.valuation)
        return Fraction(u) * Fraction(self.prime) ** self.valuation

    def signed_unit(self) -> int:
        modulus = self.prime ** self.rel_precision
        return self.unit - modulus if self.unit > modulus // 2 else self.unit

    # -- arithmetic -----------------------------------------------------

    def _coerce(self, other) -> "PadicNumber":
        if isinstance(other, PadicNumber):
            if other.prime != self.prime:
                raise PadicError(f"cannot combine elements of Q_{self.prime} and Q_{other.prime}", self.prime)
            return other
        if isinstance(other, (int, Fraction)):
            q = Fraction(other)
            if q == 0:
                return PadicNumber.zero(self.prime)
            if self.is_exact_zero():
                digits = DEFAULT_PRECISION
            else:
                digits = max(self.rel_precision, int(self.absolute_precision - rational_valuation(q, self.prime)), 1)
            return PadicNumber.from_fraction(q, self.prime, digits)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_exact_zero():
            return other
        if other.is_exact_zero():
            return self
        absolute = min(self.absolute_precision, other.absolute_precision)
        base = min(self.valuation, other.valuation)
        if base >= absolute:
            return PadicNumber.zero(self.prime, absolute)
        p = self.prime
        value = self.unit * p ** int(self.valuation - base) if not self.is_zero() else 0
        if not other.is_zero():
            value += other.unit * p ** int(other.valuation - base)
        return _normalize(p, value, int(base), int(absolute))

    __radd__ = __add__

    def __neg__(self):
        if self.is_zero():
            return self
        return PadicNumber(self.prime, self.valuation, (-self.unit) % self.prime ** self.rel_precision,
                           self.rel_precision)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_exact_zero() or other.is_exact_zero():
            return PadicNumber.zero(self.prime)
        if self.is_zero() or other.is_zero():
            # a zero's valuation field is its absolute precision
            return PadicNumber.zero(self.prime, self.valuation + other.valuation)
        rel = min(self.rel_precision, other.rel_precision)
        return PadicNumber(self.prime, self.valuation + other.valuation,
                           (self.unit * other.unit) % self.prime ** rel, rel)

    __rmul__ = __mul__

    def inverse(self) -> "PadicNumber":
        if self.is_zero():
            raise PrecisionError(f"cannot invert {self}: indistinguishable from zero", self.prime)
        modulus = self.prime ** self.rel_precision
        return PadicNumber(self.prime, -self.valuation, pow(self.unit, -1, modulus), self.rel_precision)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return self.inverse() ** (-exponent)
        if exponent == 0:
            return self._coerce(1)
        base = self
        result = None
        while exponent:
            if exponent & 1:
                result = base if result is None else result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def __eq__(self, other):
        """Equality at the guaranteed precision of both operands."""
        other = self._coerce(other) if isinstance(other, (int, Fraction, PadicNumber)) else NotImplemented
        if other is NotImplemented:
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def __str__(self):
        if self.is_exact_zero():
            return "0"
        p = self.prime
        big_o = f" + O({p}^{self.absolute_precision})"
        if self.is_zero():
            return "0" + big_o
        unit = self.signed_unit()
        if self.valuation >= 0:
            return f"{unit * p ** self.valuation}{big_o}"
        return f"{unit}/{p ** (-self.valuation)}{big_o}"

    def __repr__(self):
        return f"PadicNumber({self})"


def _normalize(p: int, value: int, base_valuation: int, absolute_precision: int) -> PadicNumber:
    """value * p^base_valuation known modulo p^absolute_precision."""
    digits = absolute_precision - base_valuation
    if digits <= 0:
        return PadicNumber.zero(p, absolute_precision)
    value %= p ** digits
    if value == 0:
        return PadicNumber.zero(p, absolute_precision)
    shift = int_valuation(value, p)
    rel = digits - shift
    return PadicNumber(p, base_valuation + shift, (value // p ** shift) % p ** rel, rel)


def from_rational(num: int, den: int, p: int, precision: int = DEFAULT_PRECISION) -> PadicNumber:
    """
    Embed num/den into Q_p with the given relative precision.

    Raises:
        PadicError: zero denominator or non-prime p
    """
    if den == 0:
        raise PadicError("zero denominator", p)
    check_prime(p)
    if precision <= 0:
        raise PrecisionError("relative precision must be positive", p)
    if num == 0:
        return PadicNumber.zero(p)
    v_num = int_valuation(num, p)
    v_den = int_valuation(den, p)
    num_unit = num // p ** v_num
    den_unit = den // p ** v_den
    modulus = p ** precision
    unit = (num_unit * pow(den_unit, -1, modulus)) % modulus
    return PadicNumber(p, v_num - v_den, unit, precision)


def to_padic(value: Union[Rational, PadicNumber], prime: int, precision: int = DEFAULT_PRECISION) -> PadicNumber:
    if isinstance(value, PadicNumber):
        return value
    return PadicNumber.from_fraction(Fraction(value), prime, precision)


_LITERAL = re.compile(
    r"^\s*(?P<num>[+-]?\d+)(?:\s*/\s*(?P<den>\d+))?"
    r"(?:\s*\+\s*O\(\s*(?P<base>\d+)\s*\^\s*(?P<exp>-?\d+)\s*\))?\s*$")


def parse_padic(text: str, prime: int, precision: int = DEFAULT_PRECISION) -> PadicNumber:
    """Parse the literal format ``num/den + O(p^k)``; k is the absolute precision."""
    match = _LITERAL.match(text)
    if not match:
        raise PadicError(f"invalid p-adic literal: {text!r}", prime)
    q = Fraction(int(match.group("num")), int(match.group("den") or 1))
    if match.group("base") is None:
        return to_padic(q, prime, precision)
    if int(match.group("base")) != prime:
        raise PadicError(f"literal {text!r} is not an element of Q_{prime}", prime)
    absolute = int(match.group("exp"))
    if q == 0:
        return PadicNumber.zero(prime, absolute)
    rel = absolute - rational_valuation(q, prime)
    if rel <= 0:
        return PadicNumber.zero(prime, absolute)
    return PadicNumber.from_fraction(q, prime, int(rel))


# -- squares ----------------------------------------------------------------

def is_square(a: PadicNumber) -> bool:
    """
    Decide whether a is in Q_p^{*2}.

    Raises:
        PrecisionError: a is indistinguishable from zero, or p = 2 with fewer
            than three known unit digits
    """
    if a.is_zero():
        raise PrecisionError(f"squareness of {a} is undecidable: indistinguishable from zero", a.prime)
    if a.valuation % 2:
        return False
    if a.prime == 2:
        if a.rel_precision < 3:
            raise PrecisionError("2-adic squareness needs three unit digits", 2)
        return a.unit % 8 == 1
    return legendre_symbol(a.unit % a.prime, a.prime) == 1


def _hensel_sqrt_unit(u: int, r: int, p: int, digits: int) -> int:
    k = 1
    while k < digits:
        k = min(2 * k, digits)
        modulus = p ** k
        r = (r - (r * r - u) * pow(2 * r, -1, modulus)) % modulus
    return r


def _sqrt_unit_2adic(u: int, digits: int) -> int:
    # keeps r = 1 mod 4; r^2 = u mod 2^digits, r known mod 2^(digits - 1)
    r = 1
    for k in range(3, digits):
        if (r * r - u) % (1 << (k + 1)):
            r += 1 << (k - 1)
    return r % (1 << (digits - 1))


def sqrt(a: PadicNumber) -> PadicNumber:
    """
    Square root with a deterministic branch: for odd p the root whose last
    unit digit lies in [1, p/2], for p = 2 the root that is 1 mod 4.

    Raises:
        NotSquareError: a is not a square in Q_p
        PrecisionError: squareness undecidable at a's precision
    """
    if a.is_exact_zero():
        return a
    if not is_square(a):
        raise NotSquareError(f"{a} is not a square in Q_{a.prime}", a.prime)
    p = a.prime
    half = a.valuation // 2
    if p == 2:
        return PadicNumber(2, half, _sqrt_unit_2adic(a.unit, a.rel_precision), a.rel_precision - 1)
    r0 = sqrt_mod(a.unit % p, p)
    r0 = min(r0, p - r0)
    return PadicNumber(p, half, _hensel_sqrt_unit(a.unit, r0, p, a.rel_precision), a.rel_precision)


@dataclass(frozen=True)
class SquareClass:
    """A coset of Q_p^* / Q_p^{*2} with an integer representative."""
    prime: int
    representative: int
    class_index: int

    @property
    def valuation(self) -> int:
        return int(int_valuation(self.representative, self.prime))


def smallest_nonresidue(p: int) -> int:
    return next(n for n in count(2) if legendre_symbol(n, p) == -1)


def square_class_reps(p: int) -> List[SquareClass]:
    """
    Coset representatives of Q_p^*/Q_p^{*2}.

    Odd p gives {1, u, p, u*p} with u the least quadratic non-residue; p = 2
    gives {±1, ±2, ±5, ±10}.
    """
    check_prime(p)
    if p == 2:
        reps = [1, -1, 2, -2, 5, -5, 10, -10]
    else:
        u = smallest_nonresidue(p)
        reps = [1, u, p, u * p]
    return [SquareClass(p, rep, index) for index, rep in enumerate(reps)]


def square_class_of(x: Union[PadicNumber, Rational], p: Optional[int] = None,
                    precision: int = DEFAULT_PRECISION) -> SquareClass:
    """The SquareClass containing the nonzero element x."""
    if not isinstance(x, PadicNumber):
        if p is None:
            raise PadicError("a prime is required to classify a rational")
        x = to_padic(x, p, precision)
    for square_class in square_class_reps(x.prime):
        if is_square(x / square_class.representative):
            return square_class
    raise PadicError(f"no square class found for {x}", x.prime)


# -- Hensel roots -----------------------------------------------------------

def _horner(coefficients: Sequence[int], x: int, modulus: int) -> int:
    acc = 0
    for c in reversed(coefficients):
        acc = (acc * x + c) % modulus
    return acc


def _valuation_mod(value: int, p: int, digits: int) -> int:
    value %= p ** digits
    return digits if value == 0 else int(int_valuation(value, p))


def _integral_coefficients(coefficients: Sequence[Union[Rational, PadicNumber]], p: int,
                           digits: int) -> tuple:
    """Scale to a primitive integral polynomial and reduce mod p^digits."""
    valuations = []
    for c in coefficients:
        if isinstance(c, PadicNumber):
            if not c.is_zero():
                valuations.append(c.valuation)
        elif c != 0:
            valuations.append(rational_valuation(c, p))
    if not valuations:
        raise PadicError("the zero polynomial has no isolated roots", p)
    shift = -min(valuations)
    modulus_digits = digits
    for c in coefficients:
        if isinstance(c, PadicNumber) and not c.is_exact_zero():
            modulus_digits = min(modulus_digits, int(c.absolute_precision + shift))
    if modulus_digits <= 0:
        raise PrecisionError("polynomial coefficients carry no usable precision", p)
    modulus = p ** modulus_digits
    scaled = []
    for c in coefficients:
        if isinstance(c, PadicNumber):
            scaled.append(0 if c.is_zero() else c.unit * p ** int(c.valuation + shift) % modulus)
        else:
            q = Fraction(c) * Fraction(p) ** shift
            scaled.append(q.numerator * pow(q.denominator, -1, modulus) % modulus if q else 0)
    while len(scaled) > 1 and scaled[-1] == 0:
        scaled.pop()
    return scaled, modulus_digits


def _taylor_shift(poly: Sequence[int], r: int, step: int, modulus: int) -> List[int]:
    """Coefficients of poly(r + step*y) mod modulus."""
    shifted = list(poly)
    n = len(shifted)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            shifted[j] = (shifted[j] + r * shifted[j + 1]) % modulus
    scale = 1
    for i in range(n):
        shifted[i] = shifted[i] * scale % modulus
        scale = scale * step % modulus
    return shifted


def hensel_roots(coefficients: Sequence[Union[Rational, PadicNumber]], prime: int,
                 precision: int = DEFAULT_PRECISION,
                 max_candidates: int = MAX_ROOT_CANDIDATES) -> List[PadicNumber]:
    """
    All simple roots in Z_p of the polynomial sum(c_i x^i).

    Each residue class r mod p^j holding a root is searched through
    g(y) = p^-e f(r + p^j y), e the content of the shifted polynomial. A
    simple root of g mod p isolates a root, which is lifted by Newton
    iteration; a multiple one is refined to the next level. Every returned
    root is known to at least precision digits.

    Raises:
        RootSeparationError: some residue class never separates (repeated
            root or precision budget too small)
    """
    check_prime(prime)
    p = prime
    poly, digits = _integral_coefficients(coefficients, p, 2 * precision + ROOT_SEARCH_SLACK)
    if digits < precision:
        raise PrecisionError(f"coefficients known to {digits} digits, {precision} requested", p)
    max_level = precision + ROOT_SEARCH_SLACK

    # (g, digits known of g, base, level) with g(y) = p^-e f(base + p^level y)
    stack = [(poly, digits, 0, 0)]
    roots: List[PadicNumber] = []
    explored = 0
    while stack:
        explored += 1
        if explored > max_candidates:
            raise RootSeparationError("too many unseparated residue classes", p)
        g, g_digits, base, level = stack.pop()
        content = min(_valuation_mod(c, p, g_digits) for c in g)
        if content >= g_digits:
            raise RootSeparationError(
                f"root near {base} mod {p}^{level} not separable within the precision budget", p, level)
        g_digits -= content
        modulus = p ** g_digits
        g = [(c // p ** content) % modulus for c in g]
        while len(g) > 1 and g[-1] == 0:
            g.pop()
        derivative = [i * c for i, c in enumerate(g)][1:] or [0]
        for y0 in range(p):
            if _horner(g, y0, p):
                continue
            if _horner(derivative, y0, p):
                y = _newton_lift(g, derivative, y0, modulus)
                step = p ** level
                roots.append(PadicNumber.from_integer(base + step * y, p, level + g_digits))
            elif level + 1 > max_level:
                raise RootSeparationError(
                    f"root near {base + p ** level * y0} mod {p}^{level + 1} not separable within the "
                    f"precision budget", p, level + 1)
            else:
                stack.append((_taylor_shift(g, y0, p, modulus), g_digits, base + p ** level * y0, level + 1))
    logger.debug("hensel_roots over Q_%d found %d root(s) after %d node(s)", p, len(roots), explored)
    return sorted(roots, key=lambda root: root.to_integer(1) if not root.is_zero() else 0)


def _newton_lift(poly: Sequence[int], derivative: Sequence[int], y: int, modulus: int) -> int:
    """The root of poly mod modulus above y, given poly'(y) a unit."""
    while _horner(poly, y, modulus):
        y = (y - _horner(poly, y, modulus) * pow(_horner(derivative, y, modulus), -1, modulus)) % modulus
    return y


def qp_roots(coefficients: Sequence[Union[Rational, PadicNumber]], prime: int,
             precision: int = DEFAULT_PRECISION,
             max_candidates: int = MAX_ROOT_CANDIDATES) -> List[PadicNumber]:
    """All simple roots in Q_p: integral ones plus inverses of the roots of the reversed polynomial lying in pZ_p."""
    coefficients = list(coefficients)
    while coefficients and (coefficients[-1] == 0 if not isinstance(coefficients[-1], PadicNumber)
                            else coefficients[-1].is_exact_zero()):
        coefficients.pop()
    roots = hensel_roots(coefficients, prime, precision, max_candidates)
    for y in hensel_roots(list(reversed(coefficients)), prime, precision, max_candidates):
        if not y.is_zero() and y.valuation >= 1:
            roots.append(y.inverse())
    return roots
