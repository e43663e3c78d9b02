"""
The open Kummer surface Y: z^2 = f(x) f(y), z != 0, of E x E.

For each rational c the map

    q_c: ((x1, y1), (x2, y2)) -> (x1, x2, c y1 y2)

sends E^c_0 x E^c_0 onto the part of Y where f(x) lies in the square class
of c. Approximating a p-adic point of Y by a rational one thus reduces to
approximating two points of E^c(Q_p) by multiples of a rational
topological generator.
"""

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

from elliptic import (
    CurveError,
    CurvePoint,
    NotInE0Error,
    TwistIsomorphism,
    TwistedModel,
    WeierstrassCurve,
    is_in_E0,
    quadratic_twist,
    scalar_mul,
)
from localdata import (
    MinimalModel,
    count_points_mod_p,
    cubic_roots_mod_p,
    group_structure_mod_p,
    kodaira_type,
    minimal_model_at,
)
from padic_core import (
    DEFAULT_PRECISION,
    INFINITY,
    PadicError,
    PadicNumber,
    is_square,
    square_class_of,
    sqrt,
)
from qp_structure import StructureError, component_group_order, elliptic_dlog
from suitability import (
    SuitabilityError,
    TwistCertificate,
    check_suitable_twists,
    construct_suitable_c,
    twisted_structure,
    verify_twist_certificate,
)

logger = logging.getLogger(__name__)

MIN_SURFACE_PRECISION = 4
DEFAULT_SLACK = 4
DLOG_EXTRA_DIGITS = 2
DLOG_ESCALATION = 8
HEIGHT_BUDGET = 5000
EXACT_RECHECK_BUDGET = 64
SAMPLE_BUDGET = 10_000
CM_CURVE = WeierstrassCurve(1, 0)


class SurfaceError(Exception):
    """Raised for points off Y or outside the open chart"""
    exit_code = 2

    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


class ApproximationError(Exception):
    """Raised when a stage of the approximation pipeline fails"""
    exit_code = 4

    def __init__(self, message: str, stage: str):
        self.message = message
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


@dataclass(frozen=True)
class KummerPointY:
    """(xi, eta, zeta) with zeta^2 = f(xi) f(eta) and zeta != 0."""
    xi: PadicNumber
    eta: PadicNumber
    zeta: PadicNumber

    @property
    def prime(self) -> int:
        return self.xi.prime

    @property
    def precision(self) -> Union[int, float]:
        return min(self.xi.absolute_precision, self.eta.absolute_precision, self.zeta.absolute_precision)

    def coordinates(self) -> Tuple[PadicNumber, PadicNumber, PadicNumber]:
        return self.xi, self.eta, self.zeta

    def __str__(self):
        return f"({self.xi}, {self.eta}, {self.zeta})"


@dataclass
class ApproximationResult:
    """
    Certificate that q_c(n1 G, n2 G) lies within p^-achieved_exponent of the
    target in every affine coordinate.
    """
    prime: int
    k: int
    c: Fraction
    d0: int
    generator: CurvePoint
    n1: int
    n2: int
    achieved_exponent: int
    target: KummerPointY
    rational_coordinates: Optional[Tuple[Fraction, Fraction, Fraction]] = None
    seed: Optional[int] = None

    @property
    def succeeded(self) -> bool:
        return self.achieved_exponent >= self.k


@dataclass
class VerificationReport:
    checks: Dict[str, bool]
    achieved_exponent: Optional[int] = None
    detail: Optional[str] = None

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


@dataclass(frozen=True)
class DriverCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class CmReport:
    prime: int
    checks: List[DriverCheck] = field(default_factory=list)
    kodaira: Dict[int, str] = field(default_factory=dict)
    approximations: List[ApproximationResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


# -- the surface and q_c ----------------------------------------------------

def on_surface(curve: WeierstrassCurve, xi, eta, zeta) -> KummerPointY:
    """
    Validate (xi, eta, zeta) as a point of Y(Q_p).

    Raises:
        SurfaceError: relation fails, zeta or f(xi) vanishes at precision,
            or a coordinate is known to fewer than 4 digits
    """
    if not curve.is_padic:
        raise SurfaceError("points of Y are p-adic: give the curve a prime")
    xi, eta, zeta = curve.element(xi), curve.element(eta), curve.element(zeta)
    for name, value in (("xi", xi), ("eta", eta), ("zeta", zeta)):
        if value.absolute_precision < MIN_SURFACE_PRECISION:
            raise SurfaceError(f"{name} = {value} has fewer than {MIN_SURFACE_PRECISION} digits")
    f_xi, f_eta = curve.f(xi), curve.f(eta)
    if f_xi.is_zero() or f_eta.is_zero():
        raise SurfaceError(f"f vanishes at precision at ({xi}, {eta}): 2-torsion abscissa, outside Y")
    if zeta.is_zero():
        raise SurfaceError("zeta is zero at precision: outside Y")
    if not zeta * zeta == f_xi * f_eta:
        raise SurfaceError(f"zeta^2 != f(xi) f(eta) at precision for ({xi}, {eta}, {zeta})")
    return KummerPointY(xi, eta, zeta)


def q_c_map(curve: WeierstrassCurve, c, first: CurvePoint, second: CurvePoint) -> Tuple:
    """
    (x1, x2, c y1 y2) for points of c y^2 = f(x).

    Raises:
        SurfaceError: an input lies on E[2] or at infinity
    """
    try:
        if not (is_in_E0(curve, first) and is_in_E0(curve, second)):
            raise SurfaceError("q_c is defined on E_0 x E_0 only")
    except NotInE0Error as error:
        raise SurfaceError(error.message) from error
    return first.x, second.x, c * first.y * second.y


def lift_to_product(curve: WeierstrassCurve, point: KummerPointY, c) -> Tuple[CurvePoint, CurvePoint]:
    """
    A preimage of point under q_c on (c y^2 = f(x))^2.

    With d = f(xi), ((xi, 1), (eta, zeta/d)) lies on the d-model and is
    moved to the c-model by (x, y) -> (x, sqrt(d/c) y).

    Raises:
        SurfaceError: d/c is not a square in Q_p
    """
    d = curve.f(point.xi)
    first = CurvePoint(point.xi, curve.element(1))
    second = CurvePoint(point.eta, point.zeta / d)
    isomorphism = TwistIsomorphism(d, Fraction(c), point.prime, curve.precision)
    try:
        return isomorphism.forward(first), isomorphism.forward(second)
    except PadicError as error:
        raise SurfaceError(f"f(xi)/c is not a square in Q_{point.prime}: {error.message}") from error


# -- approximation ----------------------------------------------------------

def _frame(curve: WeierstrassCurve, c, p: int, precision: int) -> Tuple[TwistedModel, MinimalModel]:
    model = TwistedModel(curve.rational(), c)
    return model, minimal_model_at(model.short_model.over(p, precision), p)


def _to_working(model: TwistedModel, minimal: MinimalModel, point: CurvePoint) -> CurvePoint:
    return minimal.to_minimal(model.to_short(point))


def _from_working(model: TwistedModel, minimal: MinimalModel, point: CurvePoint) -> CurvePoint:
    return model.from_short(minimal.from_minimal(point))


def evaluate_multiples(curve: WeierstrassCurve, c, generator: CurvePoint, n1: int, n2: int, p: int,
                       precision: int) -> Tuple[PadicNumber, PadicNumber, PadicNumber]:
    """q_c(n1 G, n2 G) in Q_p by double-and-add on the working model."""
    model, minimal = _frame(curve, c, p, precision)
    working = minimal.curve
    start = _to_working(model, minimal, CurvePoint(working.element(generator.x), working.element(generator.y)))
    first = _from_working(model, minimal, scalar_mul(working, n1, start))
    second = _from_working(model, minimal, scalar_mul(working, n2, start))
    return q_c_map(curve.over(p, precision), Fraction(c), first, second)


def distance_exponent(first: Tuple[PadicNumber, ...], second: Tuple[PadicNumber, ...],
                      cap: Union[int, float]) -> int:
    """Largest e with every coordinate difference in p^e Z_p, capped at cap."""
    exponent = cap
    for a, b in zip(first, second):
        difference = a - b
        exponent = min(exponent, difference.valuation)
    return int(exponent) if exponent != INFINITY else int(cap)


def _exact_coordinates(curve: WeierstrassCurve, c: Fraction, generator: CurvePoint,
                       n1: int, n2: int) -> Tuple[Fraction, Fraction, Fraction]:
    model = TwistedModel(curve.rational(), c)
    first, second = model.multiply(n1, generator), model.multiply(n2, generator)
    return first.x, second.x, c * first.y * second.y


def _certificate(curve: WeierstrassCurve, p: int, point: KummerPointY, k: int, precision: int,
                 certificates: Dict[int, TwistCertificate]) -> TwistCertificate:
    try:
        square_class = square_class_of(curve.f(point.xi))
    except PadicError as error:
        raise ApproximationError(error.message, "classify") from error
    if square_class.class_index not in certificates:
        try:
            certificates[square_class.class_index] = construct_suitable_c(curve, p, square_class, k, precision)
        except SuitabilityError as error:
            raise ApproximationError(error.message, "suitable-twist") from error
    return certificates[square_class.class_index]


def approximate(curve: WeierstrassCurve, p: int, point: KummerPointY, k: int,
                certificates: Optional[Dict[int, TwistCertificate]] = None,
                slack: int = DEFAULT_SLACK, height_budget: int = HEIGHT_BUDGET,
                seed: Optional[int] = None) -> ApproximationResult:
    """
    A rational point q_c(n1 G, n2 G) of Y within p^-k of point.

    certificates caches suitable twists by square-class index across calls.

    Raises:
        ApproximationError: with the failing stage in ``stage``
    """
    precision = curve.precision if curve.is_padic else DEFAULT_PRECISION
    if point.precision < k + slack:
        raise ApproximationError(f"target known to {point.precision} digits, k + slack = {k + slack} needed",
                                 "precision")
    if k + DLOG_ESCALATION + slack > precision:
        raise ApproximationError(f"k = {k} exceeds the working precision {precision}", "precision")
    certificates = {} if certificates is None else certificates
    certificate = _certificate(curve, p, point, k, precision, certificates)
    c, generator = certificate.c, certificate.generator

    try:
        lifted = lift_to_product(curve.over(p, precision), point, c)
    except SurfaceError as error:
        raise ApproximationError(error.message, "lift") from error

    model, minimal = _frame(curve, c, p, precision)
    working = minimal.curve
    working_generator = _to_working(model, minimal, generator)
    targets = [_to_working(model, minimal, q) for q in lifted]

    best = None
    for digits in range(k + DLOG_EXTRA_DIGITS, k + DLOG_ESCALATION + 1, 2):
        try:
            multipliers = [elliptic_dlog(working, working_generator, target, digits, certificate.quotient_order)
                           for target in targets]
        except (StructureError, PadicError) as error:
            raise ApproximationError(error.message, "dlog") from error
        try:
            image = _evaluate_with_retry(curve, p, precision, certificate, multipliers, k)
        except (SurfaceError, PadicError) as error:
            raise ApproximationError(error.message, "evaluate") from error
        multipliers, coordinates = image
        achieved = distance_exponent(coordinates, point.coordinates(), point.precision)
        best = (multipliers, achieved)
        logger.debug("dlog at %d digits: n=%s, achieved %d", digits, multipliers, achieved)
        if achieved >= k:
            break
    (n1, n2), achieved = best

    exact = None
    if max(n1, n2) <= height_budget:
        exact = _exact_coordinates(curve, c, generator, n1, n2)
    result = ApproximationResult(p, k, c, certificate.d0, generator, n1, n2, achieved, point, exact, seed)
    logger.info("approximated %s at p=%d: n1=%d n2=%d, distance p^-%d", point, p, n1, n2, achieved)
    return result


def _evaluate_with_retry(curve: WeierstrassCurve, p: int, precision: int, certificate: TwistCertificate,
                         multipliers: List[int], k: int):
    shift = certificate.quotient_order * p ** k
    try:
        return multipliers, evaluate_multiples(curve, certificate.c, certificate.generator, *multipliers, p, precision)
    except SurfaceError:
        logger.debug("multiple left E_0 at precision; shifting by Q p^k = %d", shift)
    shifted = [n + shift for n in multipliers]
    return shifted, evaluate_multiples(curve, certificate.c, certificate.generator, *shifted, p, precision)


def verify_approximation(curve: WeierstrassCurve, result: ApproximationResult,
                         extra_precision: int = 8) -> VerificationReport:
    """
    Recheck a result from (c, G, n1, n2) and the target alone, at a fresh
    precision budget.
    """
    p = result.prime
    precision = (curve.precision if curve.is_padic else DEFAULT_PRECISION) + extra_precision
    padic_curve = curve.over(p, precision)
    try:
        checks = {"target_on_surface": bool(on_surface(padic_curve, *result.target.coordinates()))}
        target_class = square_class_of(padic_curve.f(result.target.xi))
    except (SurfaceError, PadicError) as error:
        return VerificationReport({"target_on_surface": False, "within_distance": False}, detail=error.message)
    # d0 is re-derived from the target, the stored value must agree
    checks["d0_matches_target"] = target_class.representative == result.d0
    checks.update(verify_twist_certificate(curve, p, target_class.representative, result.c, result.generator,
                                           precision))
    try:
        checks["same_square_class"] = is_square(padic_curve.f(result.target.xi) / result.c)
        image = evaluate_multiples(curve, result.c, result.generator, result.n1, result.n2, p, precision)
    except (SurfaceError, CurveError, PadicError, StructureError) as error:
        checks.setdefault("same_square_class", False)
        checks["within_distance"] = False
        return VerificationReport(checks, detail=error.message)
    achieved = distance_exponent(image, result.target.coordinates(), result.target.precision)
    checks["within_distance"] = achieved >= result.k
    if result.rational_coordinates is not None:
        x1, x2, z = result.rational_coordinates
        checks["rational_on_surface"] = z != 0 and z * z == curve.rational().f(x1) * curve.rational().f(x2)
        checks["rational_matches_multiples"] = _matches_multiples(curve, result, image)
    return VerificationReport(checks, achieved)


def _matches_multiples(curve: WeierstrassCurve, result: ApproximationResult,
                       image: Tuple[PadicNumber, PadicNumber, PadicNumber]) -> bool:
    """Emitted coordinates against q_c(n1 G, n2 G): p-adically always, exactly for small multipliers."""
    coordinates = tuple(Fraction(value) for value in result.rational_coordinates)
    if not all(computed == value for computed, value in zip(image, coordinates)):
        return False
    if max(result.n1, result.n2) > EXACT_RECHECK_BUDGET:
        return True
    try:
        exact = _exact_coordinates(curve, Fraction(result.c), result.generator, result.n1, result.n2)
    except (CurveError, PadicError):
        return False
    return exact == coordinates


def coset_consistency(curve: WeierstrassCurve, result: ApproximationResult) -> bool:
    """Whether f at the produced first coordinate lies in the square class of c."""
    if result.rational_coordinates is not None:
        x1 = result.rational_coordinates[0]
        ratio = curve.rational().f(x1) / result.c
        return ratio != 0 and is_square(curve.over(result.prime).element(ratio))
    x1, _, _ = evaluate_multiples(curve, result.c, result.generator, result.n1, result.n2, result.prime,
                                  curve.precision)
    return is_square(curve.over(result.prime).f(x1) / result.c)


def sample_y_point(curve: WeierstrassCurve, seed: int, budget: int = SAMPLE_BUDGET) -> KummerPointY:
    """
    A point of Y(Q_p) drawn deterministically from seed, with integral
    xi, eta in [0, p^4).

    Raises:
        SurfaceError: no square f(xi) f(eta) within budget
    """
    if not curve.is_padic:
        raise SurfaceError("sampling Y needs a p-adic curve")
    p = curve.prime
    rng = random.Random(seed)
    for _ in range(budget):
        xi, eta = curve.element(rng.randrange(p ** 4)), curve.element(rng.randrange(p ** 4))
        product = curve.f(xi) * curve.f(eta)
        if product.is_zero() or not is_square(product):
            continue
        return on_surface(curve, xi, eta, sqrt(product))
    raise SurfaceError(f"no point of Y found in {budget} draws (seed {seed})")


# -- y^2 = x^3 + x ----------------------------------------------------------

def cm_driver(p: int, k: int = 3, samples: int = 3, seed: int = 1,
              precision: int = DEFAULT_PRECISION) -> CmReport:
    """
    Check the ingredients of density on Km(E x E) for E: y^2 = x^3 + x at a
    prime p = 3 mod 4, p > 7, then approximate sampled points of Y.

    Raises:
        SurfaceError: p outside the supported family
    """
    if p % 4 != 3 or p <= 7:
        raise SurfaceError(f"the driver needs p = 3 mod 4 and p > 7, got {p}")
    curve = CM_CURVE
    report = CmReport(p)
    checks = report.checks

    count = count_points_mod_p(curve, p)
    checks.append(DriverCheck("supersingular count", count == p + 1, f"#E(F_p) = {count}"))
    n1, n2 = group_structure_mod_p(curve, p)
    checks.append(DriverCheck("cyclic reduction", n1 == 1, f"Z/{n1} x Z/{n2}"))
    roots = cubic_roots_mod_p(1, 0, p)
    checks.append(DriverCheck("linear times quadratic", len(roots) == 1, f"roots of x^3 + x mod p: {roots}"))

    suitability = check_suitable_twists(curve, p, k, precision)
    for outcome in suitability.outcomes:
        rep = outcome.square_class.representative
        try:
            structure = twisted_structure(curve, rep, p, precision, with_generator=False)
            checks.append(DriverCheck(f"procyclic twist {rep}", structure.procyclic, structure.status.value))
        except (StructureError, PadicError) as error:
            checks.append(DriverCheck(f"procyclic twist {rep}", False, error.message))
        checks.append(DriverCheck(f"suitable c for class {rep}", outcome.ok,
                                  str(outcome.certificate.c) if outcome.ok else outcome.error))
        if outcome.square_class.valuation != 1:
            continue
        twist = quadratic_twist(curve, rep)
        kodaira = kodaira_type(twist, p)
        report.kodaira[rep] = kodaira.label
        if kodaira.label != "IV":
            logger.warning("twist by %d at p=%d has Kodaira type %s, not IV", rep, p, kodaira.label)
        try:
            m = component_group_order(twist.over(p, precision))
        except (StructureError, PadicError) as error:
            checks.append(DriverCheck(f"component order twist {rep}", False, error.message))
            continue
        checks.append(DriverCheck(f"component order twist {rep}", m == kodaira.component_order,
                                  f"{kodaira.label}: table m={kodaira.component_order}, torsion m={m}"))

    if suitability.suitable:
        certificates = {o.square_class.class_index: o.certificate for o in suitability.outcomes}
        padic_curve = curve.over(p, precision)
        for i in range(samples):
            target = sample_y_point(padic_curve, seed + i)
            try:
                result = approximate(padic_curve, p, target, k, certificates, seed=seed + i)
            except ApproximationError as error:
                checks.append(DriverCheck(f"approximation {i}", False, str(error)))
                continue
            report.approximations.append(result)
            verified = verify_approximation(padic_curve, result).passed
            checks.append(DriverCheck(f"approximation {i}", result.succeeded and verified,
                                      f"n1={result.n1} n2={result.n2} distance p^-{result.achieved_exponent}"))
    logger.info("cm driver at p=%d: %s", p, "pass" if report.passed else "fail")
    return report
