"""
Local reduction data of short Weierstrass curves at a prime p.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from sympy import factorint

from elliptic import (
    CurvePoint,
    WeierstrassCurve,
    torsion_abscissae,
)
from padic_core import INFINITY, check_prime, rational_valuation

logger = logging.getLogger(__name__)

# Kodaira symbols that force a procyclic E(Q_p) for p > 7
PROCYCLIC_KODAIRA = frozenset({"II", "III", "IV", "II*", "III*", "IV*"})
UNSUPPORTED = "unsupported"

# naive enumeration limit for residue curves
MAX_RESIDUE_PRIME = 100_000


class ReductionError(Exception):
    """Base exception for reduction-type computations"""
    exit_code = 2

    def __init__(self, message: str, prime: Optional[int] = None):
        self.message = message
        self.prime = prime
        super().__init__(self.message)


class UnsupportedReductionError(ReductionError):
    """Raised for reduction kinds the structure engine does not handle"""
    exit_code = 3


class ReductionKind(str, Enum):
    GOOD = "good"
    MULTIPLICATIVE = "multiplicative"
    ADDITIVE = "additive"


@dataclass(frozen=True)
class KodairaType:
    """A Kodaira symbol with its rational component-group order m."""
    symbol: str
    component_order: Optional[int]
    n: Optional[int] = None
    split: Optional[bool] = None

    @property
    def label(self) -> str:
        if self.symbol == "In":
            return f"I{self.n}"
        if self.symbol == "In*":
            return f"I{self.n}*"
        return self.symbol

    @property
    def in_procyclic_set(self) -> bool:
        return self.symbol in PROCYCLIC_KODAIRA


@dataclass(frozen=True)
class MinimalModel:
    """An integral short model at p, reached by (x, y) -> (x/u^2, y/u^3) with u = p^s."""
    original: WeierstrassCurve
    curve: WeierstrassCurve
    prime: int
    scaling_exponent: int
    certified_minimal: bool

    @property
    def scale(self) -> Fraction:
        return Fraction(self.prime) ** self.scaling_exponent

    def to_minimal(self, point: CurvePoint) -> CurvePoint:
        if point.is_infinity or self.scaling_exponent == 0:
            return point
        u = self.scale
        return CurvePoint(point.x / (u * u), point.y / (u * u * u))

    def from_minimal(self, point: CurvePoint) -> CurvePoint:
        if point.is_infinity or self.scaling_exponent == 0:
            return point
        u = self.scale
        return CurvePoint(point.x * u * u, point.y * u * u * u)


@dataclass(frozen=True)
class ReductionData:
    prime: int
    scaling_exponent: int
    kind: ReductionKind
    kodaira: str
    component_order: Optional[int]
    residue_count: int
    discriminant_valuation: int
    certified_minimal: bool


def minimal_model_at(curve: WeierstrassCurve, p: int) -> MinimalModel:
    """
    Rescale by u = p^s, s = min(floor(v(a)/4), floor(v(b)/6)).

    The result is integral at p; for p >= 5 it is a minimal model. For
    p in {2, 3} it is only minimal among short models and is flagged so.
    """
    check_prime(p)
    va = rational_valuation(curve.a, p)
    vb = rational_valuation(curve.b, p)
    s = int(min(va // 4 if va != INFINITY else INFINITY, vb // 6 if vb != INFINITY else INFINITY))
    u = Fraction(p) ** s
    working = WeierstrassCurve(curve.a / u ** 4, curve.b / u ** 6, p, curve.precision)
    if s:
        logger.debug("scaled %s by %d^%d at p", curve, p, s)
    return MinimalModel(curve, working, p, s, p >= 5)


def residue_mod_p(q: Fraction, p: int) -> int:
    return q.numerator * pow(q.denominator, -1, p) % p


def reduced_coefficients(curve: WeierstrassCurve, p: int) -> Tuple[int, int]:
    """(a mod p, b mod p) of the minimal model."""
    working = minimal_model_at(curve, p).curve
    return residue_mod_p(working.a, p), residue_mod_p(working.b, p)


def reduction_kind(curve: WeierstrassCurve, p: int) -> ReductionKind:
    working = minimal_model_at(curve, p).curve
    if rational_valuation(working.discriminant, p) == 0:
        return ReductionKind.GOOD
    if rational_valuation(-48 * working.a, p) == 0:
        return ReductionKind.MULTIPLICATIVE
    return ReductionKind.ADDITIVE


def _is_residue(n: int, p: int) -> bool:
    n %= p
    return n != 0 and pow(n, (p - 1) // 2, p) == 1


def cubic_roots_mod_p(a: int, b: int, p: int) -> List[int]:
    return [x for x in range(p) if (x * x * x + a * x + b) % p == 0]


def kodaira_type(curve: WeierstrassCurve, p: int) -> KodairaType:
    """
    Kodaira symbol and component order by Tate's algorithm on the short
    minimal model; p < 5 yields the unsupported marker.
    """
    if p < 5:
        return KodairaType(UNSUPPORTED, None)
    working = minimal_model_at(curve, p).curve
    a, b = working.a, working.b
    va = rational_valuation(a, p)
    vb = rational_valuation(b, p)
    delta = int(rational_valuation(working.discriminant, p))
    kind = reduction_kind(working, p)

    if kind is ReductionKind.GOOD:
        return KodairaType("I0", 1)
    if kind is ReductionKind.MULTIPLICATIVE:
        split = _is_residue(6 * residue_mod_p(b, p), p)
        m = delta if split else (2 if delta % 2 == 0 else 1)
        return KodairaType("In", m, n=delta, split=split)

    if delta == 2:
        return KodairaType("II", 1)
    if delta == 3:
        return KodairaType("III", 2)
    if delta == 4:
        return KodairaType("IV", 3 if _is_residue(residue_mod_p(b / p ** 2, p), p) else 1)
    if delta == 6 and va >= 2 and vb >= 3:
        roots = cubic_roots_mod_p(residue_mod_p(a / p ** 2, p), residue_mod_p(b / p ** 3, p), p)
        return KodairaType("I0*", 1 + len(roots))
    if delta > 6 and va == 2 and vb == 3:
        return KodairaType("In*", prime_to_p_torsion_order(working), n=delta - 6)
    if delta == 8:
        return KodairaType("IV*", 3 if _is_residue(residue_mod_p(b / p ** 4, p), p) else 1)
    if delta == 9:
        return KodairaType("III*", 2)
    if delta == 10:
        return KodairaType("II*", 1)
    raise ReductionError(f"no Kodaira type for v(Δ)={delta}, v(a)={va}, v(b)={vb}: model not minimal", p)


def prime_to_p_torsion_order(curve: WeierstrassCurve) -> int:
    """
    |E(Q_p)[4]| * |E(Q_p)[3]|, counted from division-polynomial roots.

    For additive reduction at p >= 5 this equals the order of the component
    group E(Q_p)/E^(0)(Q_p).
    """
    two = len(torsion_abscissae(curve, 2))
    four = len(torsion_abscissae(curve, 4))
    three = len(torsion_abscissae(curve, 3))
    return (1 + two + 2 * four) * (1 + 2 * three)


# -- residue curves ---------------------------------------------------------

def _square_counts(p: int) -> List[int]:
    counts = [0] * p
    for y in range(p):
        counts[y * y % p] += 1
    return counts


def _require_good(curve: WeierstrassCurve, p: int) -> Tuple[int, int]:
    check_prime(p)
    if p > MAX_RESIDUE_PRIME:
        raise ReductionError(f"p = {p} exceeds the enumeration budget {MAX_RESIDUE_PRIME}", p)
    kind = reduction_kind(curve, p)
    if kind is not ReductionKind.GOOD:
        raise ReductionError(f"{curve} has {kind.value} reduction at {p}; use residue_count", p)
    return reduced_coefficients(curve, p)


def count_points_mod_p(curve: WeierstrassCurve, p: int) -> int:
    """|Ẽ(F_p)| by naive enumeration, including the point at infinity."""
    a, b = _require_good(curve, p)
    counts = _square_counts(p)
    return 1 + sum(counts[(x * x * x + a * x + b) % p] for x in range(p))


def _affine_points(a: int, b: int, p: int) -> List[Tuple[int, int]]:
    roots: Dict[int, List[int]] = {}
    for y in range(p):
        roots.setdefault(y * y % p, []).append(y)
    return [(x, y) for x in range(p) for y in roots.get((x * x * x + a * x + b) % p, [])]


def _add_mod_p(first, second, a: int, p: int):
    if first is None:
        return second
    if second is None:
        return first
    (x1, y1), (x2, y2) = first, second
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        slope = (3 * x1 * x1 + a) * pow(2 * y1, -1, p) % p
    else:
        slope = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (slope * slope - x1 - x2) % p
    return x3, (slope * (x1 - x3) - y1) % p


def _mul_mod_p(n: int, point, a: int, p: int):
    result = None
    for bit in bin(n)[2:]:
        result = _add_mod_p(result, result, a, p)
        if bit == "1":
            result = _add_mod_p(result, point, a, p)
    return result


def group_structure_mod_p(curve: WeierstrassCurve, p: int) -> Tuple[int, int]:
    """
    (n1, n2) with Ẽ(F_p) ≅ Z/n1 x Z/n2 and n1 | n2.

    For each prime ℓ dividing the order, the ℓ-part is Z/ℓ^α x Z/ℓ^β with α the
    largest i for which |Ẽ[ℓ^i]| = ℓ^(2i).
    """
    a, b = _require_good(curve, p)
    points = _affine_points(a, b, p) + [None]
    order = len(points)
    n1 = 1
    for ell, exponent in factorint(order).items():
        alpha = 0
        for i in range(1, exponent + 1):
            killed = sum(1 for point in points if _mul_mod_p(ell ** i, point, a, p) is None)
            if killed != ell ** (2 * i):
                break
            alpha = i
        n1 *= ell ** alpha
    return n1, order // n1


def nonsingular_count_mod_p(curve: WeierstrassCurve, p: int) -> int:
    """|Ẽ_ns(F_p)| of the minimal short model, including infinity."""
    a, b = reduced_coefficients(curve, p)
    count = 1
    for x, y in _affine_points(a, b, p):
        if (2 * y) % p == 0 and (3 * x * x + a) % p == 0:
            continue
        count += 1
    return count


def residue_count(curve: WeierstrassCurve, p: int) -> int:
    """|Ẽ_ns(F_p)|: p for additive, p -/+ 1 for split/non-split multiplicative."""
    kind = reduction_kind(curve, p)
    if kind is ReductionKind.GOOD:
        return count_points_mod_p(curve, p)
    if p < 5:
        return nonsingular_count_mod_p(curve, p)
    if kind is ReductionKind.ADDITIVE:
        return p
    return p - 1 if kodaira_type(curve, p).split else p + 1


def reduction_data(curve: WeierstrassCurve, p: int) -> ReductionData:
    model = minimal_model_at(curve, p)
    working = model.curve
    kind = reduction_kind(working, p)
    kodaira = kodaira_type(working, p)
    if kind is ReductionKind.GOOD:
        kodaira = KodairaType("I0", 1)
    data = ReductionData(
        prime=p,
        scaling_exponent=model.scaling_exponent,
        kind=kind,
        kodaira=kodaira.label,
        component_order=kodaira.component_order,
        residue_count=residue_count(working, p),
        discriminant_valuation=int(rational_valuation(working.discriminant, p)),
        certified_minimal=model.certified_minimal,
    )
    logger.info("reduction of %s at %d: %s %s (m=%s)", curve.literal(), p, kind.value, data.kodaira,
                data.component_order)
    return data
