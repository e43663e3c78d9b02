"""
E(Q_p) as a topological group.

All functions work on an integral short model at p (see
localdata.minimal_model_at) and use the filtration

    E(Q_p) ⊇ E^(0)(Q_p) ⊇ E^(1)(Q_p)

where E^(1) is the kernel of reduction (points with v(x) < 0). The formal
logarithm identifies E^(1) with a lattice in Z_p.
"""

import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

from sympy import QQ, factorint
from sympy.polys.ring_series import rs_diff, rs_integrate, rs_mul, rs_series_inversion, rs_trunc
from sympy.polys.rings import ring

from elliptic import (
    INFINITY_POINT,
    TORSION_PRIMES,
    CurvePoint,
    WeierstrassCurve,
    has_qp_torsion,
    point_add,
    point_neg,
    scalar_mul,
    torsion_abscissae,
)
from localdata import (
    ReductionKind,
    UnsupportedReductionError,
    group_structure_mod_p,
    kodaira_type,
    minimal_model_at,
    nonsingular_count_mod_p,
    prime_to_p_torsion_order,
    reduction_kind,
    residue_mod_p,
)
from padic_core import INFINITY, PadicError, PadicNumber

logger = logging.getLogger(__name__)

GENERATOR_BUDGET_FACTOR = 50
MAX_COSETS = 512
# abscissae swept when enumerating E/E^(1) by sampling (p <= 3)
COSET_SWEEP = 400
# E(Q_p)/E^(0)(Q_p) has order at most 4 under additive reduction
MAX_ADDITIVE_COMPONENTS = 4
MINIMAL_LOG_VALUATION = 1


class StructureError(Exception):
    """Base exception for E(Q_p) structure computations"""
    exit_code = 4

    def __init__(self, message: str, prime: Optional[int] = None):
        self.message = message
        self.prime = prime
        super().__init__(self.message)


class GeneratorSearchError(StructureError):
    """Raised when no topological generator is found within the budget"""

    def __init__(self, message: str, prime: Optional[int] = None, tried: int = 0):
        self.tried = tried
        super().__init__(message, prime)


class DlogError(StructureError):
    """Raised when a point is not reachable from the generator at precision"""


class FiltrationLevel(str, Enum):
    OUTSIDE_E0 = "outside-E0"
    E0_NOT_E1 = "in-E0-not-E1"
    E1 = "in-E1"


class Verdict(str, Enum):
    PROCYCLIC = "procyclic"
    NOT_PROCYCLIC = "not-procyclic"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class FiltrationPosition:
    level: FiltrationLevel
    log_valuation: Optional[Union[int, float]] = None


@dataclass(frozen=True)
class QuotientData:
    """The finite quotient E(Q_p)/E^(1)(Q_p)."""
    prime: int
    order: int
    cyclic: bool
    kind: ReductionKind
    residue_count: int
    component_order: Optional[int]
    kodaira: Optional[str] = None
    sampled: bool = False
    # abscissae swept when the quotient was sampled
    sample_size: Optional[int] = None

    @property
    def sample_exact(self) -> bool:
        """A sampled quotient is certified once it reaches the largest additive component group."""
        return not self.sampled or self.component_order == MAX_ADDITIVE_COMPONENTS


@dataclass(frozen=True)
class GeneratorCertificate:
    point: CurvePoint
    quotient_order: int
    image_order: int
    log_valuation: Union[int, float]
    candidates_tried: int = 0

    @property
    def valid(self) -> bool:
        return self.image_order == self.quotient_order and self.log_valuation == MINIMAL_LOG_VALUATION


@dataclass
class GroupStructure:
    """E(Q_p) ≅ Z_p x Z/MZ when procyclic, with the evidence behind the verdict."""
    prime: int
    finite_part: int
    status: Verdict
    quotient: QuotientData
    working_model: WeierstrassCurve
    scaling_exponent: int
    generator: Optional[GeneratorCertificate] = None
    evidence: Dict[str, Any] = field(default_factory=dict)

    @property
    def procyclic(self) -> bool:
        return self.status is Verdict.PROCYCLIC

    @property
    def quotient_order(self) -> int:
        return self.quotient.order


@dataclass(frozen=True)
class CoverageReport:
    covered: bool
    checked: int
    witness: Optional[str] = None


def _require_padic(curve: WeierstrassCurve) -> int:
    if not curve.is_padic:
        raise StructureError(f"{curve} has no p-adic base")
    return curve.prime


def _as_padic(curve: WeierstrassCurve, point: CurvePoint) -> CurvePoint:
    if point.is_infinity:
        return point
    return CurvePoint(curve.element(point.x), curve.element(point.y))


def in_kernel(curve: WeierstrassCurve, point: CurvePoint) -> bool:
    """Whether point lies in E^(1)(Q_p)."""
    if point.is_infinity:
        return True
    x = curve.element(point.x)
    return not x.is_zero() and x.valuation < 0


def reduce_point(curve: WeierstrassCurve, point: CurvePoint) -> FiltrationPosition:
    """
    Position of a point in the reduction filtration.

    Raises:
        PrecisionError: coordinates too imprecise to reduce mod p
    """
    p = _require_padic(curve)
    if point.is_infinity:
        return FiltrationPosition(FiltrationLevel.E1, INFINITY)
    point = _as_padic(curve, point)
    if in_kernel(curve, point):
        t = -point.x / point.y
        return FiltrationPosition(FiltrationLevel.E1, int(t.valuation))
    xr, yr = point.x.residue(), point.y.residue()
    if (2 * yr) % p == 0 and (3 * xr * xr + residue_mod_p(curve.a, p)) % p == 0:
        return FiltrationPosition(FiltrationLevel.OUTSIDE_E0)
    return FiltrationPosition(FiltrationLevel.E0_NOT_E1)


# -- formal logarithm -------------------------------------------------------

@lru_cache(maxsize=64)
def log_series_coefficients(a: Fraction, b: Fraction, degree: int) -> Tuple[Fraction, ...]:
    """
    Coefficients c_0..c_degree of the formal logarithm L(t) = ∫ ω.

    With w = t^3 W(t) and W = 1 + a t^4 W^2 + b t^6 W^3, the invariant
    differential is ω = (1 + t W'/(2W)) dt.
    """
    R, t = ring("t", QQ)
    A, B = QQ(a.numerator, a.denominator), QQ(b.numerator, b.denominator)
    prec = degree + 1
    W = R(1)
    for _ in range(degree // 4 + 1):
        W2 = rs_mul(W, W, t, prec)
        W = rs_trunc(1 + A * t ** 4 * W2 + B * t ** 6 * rs_mul(W2, W, t, prec), t, prec)
    omega = 1 + rs_mul(t * rs_diff(W, t), rs_series_inversion(2 * W, t, prec), t, prec)
    L = rs_integrate(omega, t)
    coefficients = [Fraction(0)] * (degree + 1)
    for (n,), c in L.terms():
        if n <= degree:
            coefficients[n] = Fraction(int(c.numerator), int(c.denominator))
    return tuple(coefficients)


def _floor_log(p: int, n: int) -> int:
    e = 0
    while p ** (e + 1) <= n:
        e += 1
    return e


def truncation_degree(p: int, t_valuation: int, target: int) -> int:
    """Smallest D with v(c_n t^n) >= target for every n > D."""
    n = 1
    while (n + 1) * t_valuation - _floor_log(p, n + 1) < target:
        n += 1
    # round up so nearby targets share cached series
    return -(-n // 8) * 8


def formal_log(curve: WeierstrassCurve, point: CurvePoint) -> PadicNumber:
    """
    Formal-group logarithm of a point of E^(1), evaluated at t = -x/y.

    For p = 2 and v(t) = 1 the series is evaluated at 2P and halved.

    Raises:
        StructureError: point is not in E^(1)
    """
    p = _require_padic(curve)
    if point.is_infinity:
        return PadicNumber.zero(p)
    point = _as_padic(curve, point)
    if not in_kernel(curve, point):
        raise StructureError(f"{point} is not in the kernel of reduction", p)
    t = -point.x / point.y
    if p == 2 and t.valuation < 2:
        return formal_log(curve, point_add(curve, point, point)) / 2
    degree = truncation_degree(p, int(t.valuation), int(t.absolute_precision))
    coefficients = log_series_coefficients(curve.a, curve.b, degree)
    total = PadicNumber.zero(p)
    power = t
    for n in range(1, degree + 1):
        if coefficients[n]:
            total = total + power * coefficients[n]
        power = power * t
    return total


def log_valuation(value: PadicNumber) -> Union[int, float]:
    return INFINITY if value.is_zero() else int(value.valuation)


# -- finite quotient --------------------------------------------------------

def sweep_points(curve: WeierstrassCurve, limit: int, skip_two_torsion: bool = True) -> Iterator[Tuple[int, CurvePoint]]:
    """Points (x, sqrt f(x)) for x = 0, 1, ..., limit - 1 with f(x) a square."""
    for x in range(limit):
        point = curve.lift_x(x)
        if point is None:
            continue
        if skip_two_torsion and point.y.is_zero():
            continue
        yield x, point


def kernel_order(curve: WeierstrassCurve, point: CurvePoint, bound: int) -> int:
    """Order of the image of point in E/E^(1), by repeated addition."""
    current = point
    for n in range(1, bound + 1):
        if in_kernel(curve, current):
            return n
        current = point_add(curve, current, point)
    raise StructureError(f"image of {point} in E/E^(1) has order above {bound}", curve.prime)


def _same_coset(curve: WeierstrassCurve, first: CurvePoint, second: CurvePoint) -> bool:
    return in_kernel(curve, point_add(curve, first, point_neg(curve, second)))


def enumerate_cosets(curve: WeierstrassCurve, limit: int = COSET_SWEEP) -> List[CurvePoint]:
    """
    Representatives of E/E^(1), as the subgroup generated by swept points.

    This is a sampled computation: cosets containing no swept point and not
    reachable by sums are missed.
    """
    representatives = [INFINITY_POINT]
    pending = [point for _, point in sweep_points(curve, limit, skip_two_torsion=False)]
    pending.reverse()
    while pending:
        candidate = pending.pop()
        if any(_same_coset(curve, candidate, known) for known in representatives):
            continue
        pending.extend(point_add(curve, candidate, known) for known in representatives if not known.is_infinity)
        representatives.append(candidate)
        if len(representatives) > MAX_COSETS:
            raise StructureError(f"more than {MAX_COSETS} cosets of E^(1)", curve.prime)
    logger.debug("coset enumeration on %s: %d cosets", curve, len(representatives))
    return representatives


def finite_quotient(curve: WeierstrassCurve) -> QuotientData:
    """
    Order and cyclicity of E(Q_p)/E^(1)(Q_p) on the working model.

    Raises:
        UnsupportedReductionError: multiplicative reduction
    """
    p = _require_padic(curve)
    kind = reduction_kind(curve, p)
    if kind is ReductionKind.MULTIPLICATIVE:
        raise UnsupportedReductionError(f"{curve} has multiplicative reduction at {p}", p)
    if kind is ReductionKind.GOOD:
        n1, n2 = group_structure_mod_p(curve, p)
        return QuotientData(p, n1 * n2, n1 == 1, kind, n1 * n2, 1, "I0")
    if p >= 5:
        kodaira = kodaira_type(curve, p)
        m = kodaira.component_order
        cyclic = m != 4 or len(torsion_abscissae(curve, 2)) < 3
        return QuotientData(p, m * p, cyclic, kind, p, m, kodaira.label)
    representatives = enumerate_cosets(curve)
    order = len(representatives)
    cyclic = any(kernel_order(curve, rep, order) == order for rep in representatives)
    residue = nonsingular_count_mod_p(curve, p)
    return QuotientData(p, order, cyclic, kind, residue, order // residue, None, sampled=True,
                        sample_size=COSET_SWEEP)


def component_group_order(curve: WeierstrassCurve) -> int:
    """
    |E(Q_p)/E^(0)(Q_p)| computed without Tate's table: prime-to-p torsion
    for p >= 5, sampled coset enumeration for p <= 3.
    """
    p = _require_padic(curve)
    working = minimal_model_at(curve, p).curve
    kind = reduction_kind(working, p)
    if kind is ReductionKind.GOOD:
        return 1
    if kind is ReductionKind.MULTIPLICATIVE:
        raise UnsupportedReductionError(f"{curve} has multiplicative reduction at {p}", p)
    if p >= 5:
        return prime_to_p_torsion_order(working)
    return len(enumerate_cosets(working)) // nonsingular_count_mod_p(working, p)


# -- generators -------------------------------------------------------------

def image_order(curve: WeierstrassCurve, point: CurvePoint, quotient_order: int) -> int:
    """Order of the image of point in E/E^(1), a group of order quotient_order."""
    if not in_kernel(curve, scalar_mul(curve, quotient_order, point)):
        raise StructureError(f"{quotient_order}·P is not in E^(1): quotient order is wrong", curve.prime)
    order = quotient_order
    for ell in factorint(quotient_order):
        while order % ell == 0 and in_kernel(curve, scalar_mul(curve, order // ell, point)):
            order //= ell
    return order


def certify_generator(curve: WeierstrassCurve, point: CurvePoint, quotient_order: int,
                      candidates_tried: int = 0) -> GeneratorCertificate:
    """Check both generator conditions: full image in E/E^(1) and v(log(Q·G)) minimal."""
    point = _as_padic(curve, point)
    image = image_order(curve, point, quotient_order)
    value = formal_log(curve, scalar_mul(curve, quotient_order, point))
    return GeneratorCertificate(point, quotient_order, image, log_valuation(value), candidates_tried)


def _kernel_candidates(curve: WeierstrassCurve, limit: int) -> Iterator[CurvePoint]:
    p = curve.prime
    for u in range(1, limit):
        if u % p == 0:
            continue
        point = curve.lift_x(Fraction(u, p * p))
        if point is not None:
            yield point


def _generator_candidates(curve: WeierstrassCurve, quotient: QuotientData, limit: int) -> Iterator[CurvePoint]:
    p = curve.prime
    if quotient.order == 1:
        yield from _kernel_candidates(curve, limit)
        return
    if quotient.component_order != 1:
        # points off E^(0) reduce to the singular point x = 0 mod p
        for i in range(1, limit):
            point = curve.lift_x(p * i)
            if point is not None and not point.y.is_zero():
                yield point
    for _, point in sweep_points(curve, limit):
        yield point


def search_generator(curve: WeierstrassCurve, quotient: QuotientData,
                     budget: Optional[int] = None) -> GeneratorCertificate:
    """
    Deterministic sweep x = 0, 1, 2, ... for a certified topological generator.
    With a nontrivial component group the multiples x = p, 2p, ... go first;
    when E = E^(1) the sweep runs over x = u/p^2 instead.

    Raises:
        GeneratorSearchError: nothing certified within budget (default 50·p)
    """
    p = _require_padic(curve)
    budget = budget or GENERATOR_BUDGET_FACTOR * p
    candidates = _generator_candidates(curve, quotient, budget)
    tried = 0
    for point in candidates:
        tried += 1
        try:
            certificate = certify_generator(curve, point, quotient.order, tried)
        except (PadicError, StructureError) as error:
            logger.debug("skipping %s: %s", point, error.message)
            continue
        if certificate.valid:
            logger.info("generator %s on %s after %d candidate(s)", point, curve, tried)
            return certificate
    raise GeneratorSearchError(f"no topological generator among {tried} candidates on {curve}", p, tried)


def find_topological_generator(curve: WeierstrassCurve,
                               structure: Optional[GroupStructure] = None) -> GeneratorCertificate:
    """
    Certified topological generator of E(Q_p) on the working model.

    Raises:
        StructureError: E(Q_p) is not (known to be) procyclic
        GeneratorSearchError: search budget exhausted
    """
    if structure is None:
        structure = qp_group_structure(curve)
    if not structure.procyclic:
        raise StructureError(f"E(Q_{structure.prime}) is {structure.status.value}; no topological generator",
                             structure.prime)
    if structure.generator is not None:
        return structure.generator
    return search_generator(structure.working_model, structure.quotient)


# -- procyclicity -----------------------------------------------------------

def _p_torsion_verdict(curve: WeierstrassCurve, quotient: QuotientData) -> Tuple[Optional[bool], str]:
    p = curve.prime
    if p in TORSION_PRIMES:
        try:
            return has_qp_torsion(curve, p), f"{p}-division polynomial root scan"
        except PadicError as error:
            return None, f"{p}-torsion scan undecided: {error.message}"
    if quotient.kind is ReductionKind.ADDITIVE:
        return False, "additive reduction at p > 7: E^(0)(Q_p) ≅ Z_p"
    if quotient.order % p:
        return False, "p does not divide |Ẽ(F_p)|"
    return None, "p divides |Ẽ(F_p)|"


def _torsion_scan(curve: WeierstrassCurve, quotient_order: int) -> Dict[str, str]:
    scan = {}
    for ell in TORSION_PRIMES:
        if ell == curve.prime or quotient_order % ell:
            continue
        try:
            scan[str(ell)] = "present" if has_qp_torsion(curve, ell) else "absent"
        except PadicError as error:
            scan[str(ell)] = f"undecided ({error.message})"
    return scan


def _prime_to_p_part(n: int, p: int) -> int:
    while n % p == 0:
        n //= p
    return n


def qp_group_structure(curve: WeierstrassCurve, with_generator: bool = True) -> GroupStructure:
    """
    Decide whether E(Q_p) is procyclic and describe it as Z_p x Z/MZ.

    The verdict is procyclic iff E/E^(1) is cyclic and E(Q_p) has no
    p-torsion. Undecided p-torsion is settled by a certified generator
    (p >= 3) or reported as unknown.

    Raises:
        UnsupportedReductionError: multiplicative reduction
    """
    p = _require_padic(curve)
    model = minimal_model_at(curve, p)
    working = model.curve
    quotient = finite_quotient(working)
    evidence: Dict[str, Any] = {
        "kind": quotient.kind.value,
        "kodaira": quotient.kodaira,
        "component_order": quotient.component_order,
        "residue_count": quotient.residue_count,
        "quotient_order": quotient.order,
        "quotient_cyclic": quotient.cyclic,
        "quotient_sampled": quotient.sampled,
        "torsion_scan": _torsion_scan(working, quotient.order),
    }
    if quotient.sampled:
        evidence["quotient_sample"] = {
            "swept_abscissae": quotient.sample_size,
            "cosets_found": quotient.order,
            "exact": quotient.sample_exact,
        }

    if not quotient.cyclic:
        status = Verdict.NOT_PROCYCLIC
        evidence["reason"] = "E(Q_p)/E^(1)(Q_p) is not cyclic"
        evidence["witness"] = f"full 2-torsion: {len(torsion_abscissae(working, 2))} Q_p-roots of f" \
            if quotient.order % 2 == 0 else "non-cyclic quotient"
    else:
        p_torsion, reason = _p_torsion_verdict(working, quotient)
        evidence["p_torsion"] = reason
        if p_torsion:
            status = Verdict.NOT_PROCYCLIC
            evidence["reason"] = f"E(Q_p) has {p}-torsion"
            evidence["witness"] = reason
        elif p_torsion is False:
            status = Verdict.PROCYCLIC
        else:
            status = Verdict.UNKNOWN

    generator = None
    if with_generator and (status is Verdict.PROCYCLIC or (status is Verdict.UNKNOWN and p >= 3)):
        try:
            generator = search_generator(working, quotient)
            evidence["log_valuation"] = generator.log_valuation
        except (GeneratorSearchError, PadicError) as error:
            evidence["generator_search"] = error.message
        if status is Verdict.UNKNOWN and generator is not None:
            status = Verdict.PROCYCLIC
            evidence["p_torsion"] += "; certified generator excludes p-torsion"

    structure = GroupStructure(
        prime=p,
        finite_part=_prime_to_p_part(quotient.order, p),
        status=status,
        quotient=quotient,
        working_model=working,
        scaling_exponent=model.scaling_exponent,
        generator=generator,
        evidence=evidence,
    )
    logger.info("E(Q_%d) for %s: %s, Q=%d", p, curve.literal(), status.value, quotient.order)
    return structure


# -- discrete logarithm -----------------------------------------------------

def elliptic_dlog(curve: WeierstrassCurve, generator: CurvePoint, target: CurvePoint, k: int,
                  quotient_order: int) -> int:
    """
    n >= 0 with n·G - T in E^(1) and v(log(n·G - T)) >= k + 1.

    Raises:
        DlogError: T not reachable, or the log ratio leaves Z_p
        PrecisionError: logs known to fewer than k digits
    """
    p = _require_padic(curve)
    if target.is_infinity:
        return 0
    generator = _as_padic(curve, generator)
    target = _as_padic(curve, target)

    multiple = INFINITY_POINT
    residue = None
    difference = None
    for r in range(quotient_order):
        difference = point_add(curve, target, point_neg(curve, multiple))
        if in_kernel(curve, difference):
            residue = r
            break
        multiple = point_add(curve, multiple, generator)
    if residue is None:
        raise DlogError(f"{target} is not in the closure of <G> modulo E^(1)", p)

    lam_h = formal_log(curve, scalar_mul(curve, quotient_order, generator))
    lam_t = formal_log(curve, difference)
    if lam_h.is_zero():
        raise DlogError("log(Q·G) vanishes: G has finite order", p)
    if not lam_t.is_zero() and lam_t.valuation < lam_h.valuation:
        raise DlogError(f"log ratio leaves Z_p (v={lam_t.valuation} < {lam_h.valuation})", p)
    ratio = lam_t / lam_h
    n = residue + quotient_order * ratio.to_integer(k)
    logger.debug("dlog: r=%d, n=%d", residue, n)
    return n


def closure_covers(curve: WeierstrassCurve, generator: CurvePoint, quotient_order: int,
                   sample_size: int, k: int, seed: int = 1) -> CoverageReport:
    """Sampled check that every point is within p^-(k+1) of some n·G in the log metric."""
    p = _require_padic(curve)
    rng = random.Random(seed)
    generator = _as_padic(curve, generator)
    checked = 0
    attempts = 0
    while checked < sample_size:
        attempts += 1
        if attempts > 50 * (sample_size + 1):
            return CoverageReport(False, checked, "could not sample enough points")
        target = curve.lift_x(rng.randrange(p ** 4))
        if target is None or target.y.is_zero():
            continue
        try:
            n = elliptic_dlog(curve, generator, target, k, quotient_order)
            gap = point_add(curve, scalar_mul(curve, n, generator), point_neg(curve, target))
            if not in_kernel(curve, gap):
                return CoverageReport(False, checked, f"{n}·G - {target} is not in E^(1)")
            value = formal_log(curve, gap)
            if not value.is_zero() and value.valuation < k + 1:
                return CoverageReport(False, checked, f"v(log({n}·G - T)) = {value.valuation} < {k + 1}")
        except (StructureError, PadicError) as error:
            return CoverageReport(False, checked, f"{target}: {error.message}")
        checked += 1
    return CoverageReport(True, checked)
