"""
Suitable twists.

E has suitable twists at p when every class d of Q_p^*/Q_p^{*2} contains a
rational c with E^c(Q) dense in E^c(Q_p). The construction starts from a
topological generator (z, w) of E^d(Q_p), replaces it by a nearby rational
point (u, v), and takes c = d * g(u)/v^2 so that (u, v) lies on the twist.
"""

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Tuple

from elliptic import (
    CurveError,
    CurvePoint,
    TwistedModel,
    WeierstrassCurve,
    quadratic_twist,
    twist_transport,
)
from localdata import (
    ReductionError,
    kodaira_type,
    minimal_model_at,
)
from padic_core import (
    DEFAULT_PRECISION,
    PadicError,
    SquareClass,
    is_square,
    rational_valuation,
    square_class_of,
    square_class_reps,
    to_padic,
)
from qp_structure import (
    GeneratorCertificate,
    GroupStructure,
    StructureError,
    Verdict,
    certify_generator,
    finite_quotient,
    qp_group_structure,
)

logger = logging.getLogger(__name__)

MIN_TRUNCATION = 4
TRUNCATION_BACKOFF = 12
SEARCH_BUDGET = 10_000


class SuitabilityError(Exception):
    """Raised when a square class has no constructible suitable twist"""
    exit_code = 4

    def __init__(self, message: str, square_class: Optional[SquareClass] = None):
        self.message = message
        self.square_class = square_class
        super().__init__(self.message)


@dataclass(frozen=True)
class TwistCertificate:
    """
    A rational c in the class of d0 and a rational point (x, y) on
    c y^2 = f(x) generating E^c(Q_p) topologically.
    """
    prime: int
    target_class: SquareClass
    d0: int
    c: Fraction
    c_prime: Fraction
    generator: CurvePoint
    truncation_exponent: int
    quotient_order: int
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def verified(self) -> bool:
        return bool(self.checks) and all(self.checks.values())


@dataclass(frozen=True)
class ClassOutcome:
    square_class: SquareClass
    certificate: Optional[TwistCertificate] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.certificate is not None and self.certificate.verified


@dataclass(frozen=True)
class SuitabilityReport:
    curve: WeierstrassCurve
    prime: int
    outcomes: Tuple[ClassOutcome, ...]

    @property
    def suitable(self) -> bool:
        return all(outcome.ok for outcome in self.outcomes)

    def certificate_for(self, square_class: SquareClass) -> TwistCertificate:
        for outcome in self.outcomes:
            if outcome.square_class.class_index == square_class.class_index and outcome.ok:
                return outcome.certificate
        raise SuitabilityError(f"no certificate for the class of {square_class.representative}", square_class)


@dataclass(frozen=True)
class SearchHit:
    """A curve found by search_procyclic_curves with per-class verdicts."""
    curve: WeierstrassCurve
    kodaira: str
    j_invariant: Fraction
    classes: Dict[int, str]


# -- generators on twists ---------------------------------------------------

def twisted_structure(curve: WeierstrassCurve, c, p: int, precision: int = DEFAULT_PRECISION,
                      with_generator: bool = True) -> GroupStructure:
    """qp_group_structure of the twist c y^2 = f(x), on its short model."""
    twist = quadratic_twist(curve.rational(), c).over(p, precision)
    return qp_group_structure(twist, with_generator=with_generator)


def certify_twist_generator(curve: WeierstrassCurve, c, point: CurvePoint, p: int,
                            precision: int = DEFAULT_PRECISION) -> GeneratorCertificate:
    """
    Certify a point of c y^2 = f(x) as a topological generator of E^c(Q_p).

    Raises:
        CurveError: point not on the twisted model
    """
    model = TwistedModel(curve.rational(), c)
    if not model.contains(point):
        raise CurveError(f"{point} is not on {model}", curve)
    short = model.short_model.over(p, precision)
    minimal = minimal_model_at(short, p)
    working_point = minimal.to_minimal(model.to_short(point))
    quotient = finite_quotient(minimal.curve)
    return certify_generator(minimal.curve, working_point, quotient.order)


def _generator_on_short_model(structure: GroupStructure, twist: WeierstrassCurve) -> CurvePoint:
    model = minimal_model_at(twist, structure.prime)
    return model.from_minimal(structure.generator.point)


# -- the construction -------------------------------------------------------

def construct_suitable_c(curve: WeierstrassCurve, p: int, d_class: SquareClass, k: int,
                         precision: int = DEFAULT_PRECISION) -> TwistCertificate:
    """
    Build c in the class of d_class with a rational topological generator.

    With g the cubic of E^{d0}, a truncation (u, v) of a generator of
    E^{d0}(Q_p) modulo p^j gives c' = g(u)/v^2, a square close to 1, and
    c = d0 * c'. On c y^2 = f(x) the generator is (u/d0, v/d0^2).

    Raises:
        SuitabilityError: class not procyclic, no generator, or budget spent
    """
    d0 = d_class.representative
    twist = quadratic_twist(curve.rational(), d0)
    try:
        structure = qp_group_structure(twist.over(p, precision))
    except (StructureError, ReductionError, PadicError) as error:
        raise SuitabilityError(f"class {d0}: {error.message}", d_class) from error
    if not structure.procyclic:
        raise SuitabilityError(f"E^{d0}(Q_{p}) is {structure.status.value}: "
                               f"{structure.evidence.get('reason', 'undecided')}", d_class)
    if structure.generator is None:
        raise SuitabilityError(f"no topological generator on E^{d0}(Q_{p}): "
                               f"{structure.evidence.get('generator_search', '')}", d_class)

    padic_twist = twist.over(p, precision)
    start = _generator_on_short_model(structure, padic_twist)
    z, w = start.x, start.y
    if w.is_zero():
        raise SuitabilityError(f"generator of E^{d0}(Q_{p}) has w = 0", d_class)

    closeness = max(MIN_TRUNCATION, k)
    for j in range(closeness, k + TRUNCATION_BACKOFF + 1):
        try:
            u, v = z.truncate(j), w.truncate(j)
        except PadicError as error:
            raise SuitabilityError(f"class {d0}: {error.message}", d_class) from error
        if v == 0:
            continue
        c_prime = twist.f(u) / (v * v)
        if c_prime == 0:
            continue
        gap = rational_valuation(c_prime - 1, p)
        if gap < closeness or not is_square(to_padic(c_prime, p, precision)):
            logger.debug("class %d, j=%d: v(c'-1)=%s, retrying", d0, j, gap)
            continue

        c = d0 * c_prime
        generator = CurvePoint(u / d0, v / (d0 * d0))
        try:
            # (u, v) on c' Y^2 = g(X) moved onto E^{d0}; c' is a square so the twist is trivial
            transported = twist_transport(CurvePoint(u, v), c_prime, 1, p, precision)
            on_twist = certify_generator(structure.working_model,
                                         minimal_model_at(padic_twist, p).to_minimal(transported),
                                         structure.quotient_order)
            direct = certify_twist_generator(curve, c, generator, p, precision)
        except (StructureError, PadicError) as error:
            logger.debug("class %d, j=%d: %s", d0, j, error.message)
            continue
        checks = {
            "c_over_d_square": is_square(to_padic(Fraction(d0) / c, p, precision)),
            "c_prime_square": True,
            "generator_transported": on_twist.valid,
            "generator_on_c_model": direct.valid,
        }
        if not all(checks.values()):
            continue
        logger.info("class %d at p=%d: c' = g(u)/v^2 with j=%d, v(c'-1)=%s", d0, p, j, gap)
        return TwistCertificate(p, d_class, d0, c, c_prime, generator, j, direct.quotient_order, checks)

    raise SuitabilityError(f"class {d0}: no certified c within j <= {k + TRUNCATION_BACKOFF}", d_class)


def check_suitable_twists(curve: WeierstrassCurve, p: int, k: int,
                          precision: int = DEFAULT_PRECISION) -> SuitabilityReport:
    """Run construct_suitable_c for every square class; failures are recorded per class."""
    outcomes = []
    for square_class in square_class_reps(p):
        try:
            certificate = construct_suitable_c(curve, p, square_class, k, precision)
            outcomes.append(ClassOutcome(square_class, certificate))
        except SuitabilityError as error:
            logger.info("class %d at p=%d failed: %s", square_class.representative, p, error.message)
            outcomes.append(ClassOutcome(square_class, error=error.message))
    report = SuitabilityReport(curve.rational(), p, tuple(outcomes))
    logger.info("%s at p=%d: suitable=%s", curve.literal(), p, report.suitable)
    return report


def verify_twist_certificate(curve: WeierstrassCurve, p: int, d0: int, c: Fraction, generator: CurvePoint,
                             precision: int = DEFAULT_PRECISION) -> Dict[str, bool]:
    """Recompute the checks of a certificate from its rational data only."""
    checks = {"c_over_d_square": False, "generator_on_c_model": False}
    try:
        checks["c_over_d_square"] = is_square(to_padic(Fraction(d0) / Fraction(c), p, precision))
        checks["generator_on_c_model"] = certify_twist_generator(curve, c, generator, p, precision).valid
    except (CurveError, StructureError, PadicError) as error:
        logger.info("certificate check failed: %s", error.message)
    return checks


# -- procyclic families -----------------------------------------------------

def meets_family_criteria(a: Fraction, b: Fraction, p: int) -> bool:
    """Valuation and congruence criteria that force a procyclic E(Q_p) for p <= 7."""
    va, vb = rational_valuation(a, p), rational_valuation(b, p)
    if p == 2:
        return va >= 1 and vb == 1
    if p == 3:
        return va == 1 and vb > 1
    if p == 5:
        return va >= 1 and vb == 1 and (a.denominator == 1 and a.numerator % 25 not in (10, 15))
    if p == 7:
        return va >= 1 and vb == 1 and (b.denominator == 1 and b.numerator % 49 not in (14, 35))
    raise SuitabilityError(f"family criteria are stated for p <= 7, got {p}")


def _candidates(p: int) -> Iterator[Tuple[int, int]]:
    """(a, b) = (p*i, p*j) ordered by height max(|i|, |j|)."""
    height = 0
    while True:
        height += 1
        for i in range(-height, height + 1):
            for j in range(-height, height + 1):
                if max(abs(i), abs(j)) == height:
                    yield p * i, p * j
        if height == 1:
            yield 0, 0


def _all_classes_procyclic(curve: WeierstrassCurve, p: int, precision: int) -> Optional[Dict[int, str]]:
    verdicts = {}
    for square_class in square_class_reps(p):
        try:
            structure = twisted_structure(curve, square_class.representative, p, precision, with_generator=False)
            if structure.status is Verdict.UNKNOWN:
                structure = twisted_structure(curve, square_class.representative, p, precision)
        except (StructureError, ReductionError, PadicError) as error:
            logger.debug("%s, class %d: %s", curve.literal(), square_class.representative, error.message)
            return None
        if not structure.procyclic:
            return None
        verdicts[square_class.representative] = structure.status.value
    return verdicts


def search_procyclic_curves(p: int, count: int, precision: int = DEFAULT_PRECISION,
                            budget: int = SEARCH_BUDGET) -> List[SearchHit]:
    """
    Small curves with every twist class procyclic at p, with distinct
    j-invariants: Kodaira type in {II, III, IV, II*, III*, IV*} for p > 7,
    the family criteria for p <= 7.

    Raises:
        SuitabilityError: budget exhausted before count curves were found
    """
    if count > SEARCH_BUDGET:
        raise SuitabilityError(f"count must be at most {SEARCH_BUDGET}, got {count}")
    hits: List[SearchHit] = []
    seen_j = set()
    examined = 0
    for a, b in _candidates(p):
        if len(hits) >= count:
            break
        examined += 1
        if examined > budget:
            raise SuitabilityError(f"found {len(hits)} of {count} curves within {budget} candidates")
        try:
            curve = WeierstrassCurve(a, b)
        except CurveError:
            continue
        if curve.j_invariant in seen_j:
            continue
        if p > 7:
            try:
                kodaira = kodaira_type(curve, p)
            except ReductionError:
                continue
            if not kodaira.in_procyclic_set:
                continue
            label = kodaira.label
        else:
            if not meets_family_criteria(curve.a, curve.b, p):
                continue
            label = "family"
        verdicts = _all_classes_procyclic(curve, p, precision)
        if verdicts is None:
            logger.debug("rejected %s at p=%d", curve.literal(), p)
            continue
        seen_j.add(curve.j_invariant)
        hits.append(SearchHit(curve, label, curve.j_invariant, verdicts))
        logger.info("found %s (%s), j=%s", curve.literal(), label, curve.j_invariant)
    return hits


def twist_stability_check(curve: WeierstrassCurve, p: int, trials: int = 1, seed: int = 1) -> bool:
    """
    Whether every twist E^c keeps its Kodaira type in the procyclic set.

    Each class is tested on its representative and on trials - 1 further
    representatives rep * s^2 with s a random unit.

    Raises:
        SuitabilityError: p <= 7 or E itself is not of a procyclic type
    """
    if p <= 7:
        raise SuitabilityError(f"twist stability is checked for p > 7, got {p}")
    if not kodaira_type(curve, p).in_procyclic_set:
        raise SuitabilityError(f"{curve.literal()} has type {kodaira_type(curve, p).label} at {p}")
    rng = random.Random(seed)
    for square_class in square_class_reps(p):
        representatives = [square_class.representative]
        while len(representatives) < max(trials, 1):
            s = rng.randrange(1, p * p)
            if s % p:
                representatives.append(square_class.representative * s * s)
        for c in representatives:
            label = kodaira_type(quadratic_twist(curve.rational(), c), p)
            if not label.in_procyclic_set:
                logger.info("twist by %d of %s has type %s", c, curve.literal(), label.label)
                return False
    return True


def class_of_twist(c: Fraction, p: int) -> SquareClass:
    """Square class of a twist parameter."""
    return square_class_of(Fraction(c), p)

