import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

import pandas as pd
from dotenv import load_dotenv
from pydantic import BaseModel

from elliptic import CurveError, CurvePoint, WeierstrassCurve, quadratic_twist
from kummer_surface import (
    ApproximationError,
    ApproximationResult,
    KummerPointY,
    approximate,
    on_surface,
    sample_y_point,
    verify_approximation,
)
from localdata import ReductionError, reduction_data
from padic_core import PadicError, parse_padic, square_class_of, square_class_reps
from qp_structure import StructureError, qp_group_structure
from reports.models import (
    AnalysisReport,
    ApproximationBatch,
    ApproximationRecord,
    ClassStructureRecord,
    ReductionRecord,
    RunConfig,
    StructureRecord,
    VerificationRecord,
)
from suitability import TwistCertificate

load_dotenv()

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or not value.strip():
        return default
    try:
        return int(value)
    except ValueError:
        logger.warning("ignoring non-integer %s=%r", name, value)
        return default


def environment_defaults() -> Dict[str, Union[int, str]]:
    """Defaults for the global flags, read from KUMMER_* variables."""
    return {
        "precision": env_int("KUMMER_PRECISION", 24),
        "slack": env_int("KUMMER_SLACK", 4),
        "jobs": env_int("KUMMER_JOBS", 1),
        "seed": env_int("KUMMER_SEED", 1),
        "height_budget": env_int("KUMMER_HEIGHT_BUDGET", 5000),
        "log_level": os.getenv("KUMMER_LOG_LEVEL", "WARNING").upper(),
    }


def run_tasks(func: Callable[[T], R], items: Sequence[T], jobs: int = 1) -> List[R]:
    """Apply func to every item on a worker pool; results keep input order."""
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(func, items))


def emit_json(record: BaseModel) -> str:
    """Deterministic JSON for a record: sorted keys, no timestamps."""
    return json.dumps(record.model_dump(mode="json", by_alias=True), sort_keys=True, indent=2)


def export_csv(rows: List[Dict], filename: str) -> int:
    """Write rows with pandas; returns the number of rows written."""
    df = pd.DataFrame(rows)
    df.to_csv(filename, index=False)
    logger.info("exported %d rows to %s", len(df), filename)
    return len(df)


def config_curve(config: RunConfig) -> WeierstrassCurve:
    if config.a is None:
        raise CurveError(f"command {config.command!r} needs a curve (a=<rat> b=<rat>)")
    return WeierstrassCurve(Fraction(config.a), Fraction(config.b), config.p, config.precision)


# -- analyze ----------------------------------------------------------------

def _structure_or_error(curve: WeierstrassCurve) -> Tuple[Optional[StructureRecord], Optional[str]]:
    try:
        return StructureRecord.from_structure(qp_group_structure(curve)), None
    except (StructureError, ReductionError, PadicError) as error:
        return None, error.message


def analyze_curve(config: RunConfig, all_classes: bool = False) -> AnalysisReport:
    """
    ReductionData and GroupStructure of the configured curve and, with
    all_classes, of each of its twists by square-class representatives.

    Raises:
        UnsupportedReductionError: multiplicative reduction of the curve itself
    """
    curve = config_curve(config)
    data = reduction_data(curve, config.p)
    structure = StructureRecord.from_structure(qp_group_structure(curve))
    report = AnalysisReport(config=config, curve=curve.literal(), reduction=ReductionRecord.from_data(data),
                            discriminant_valuation=data.discriminant_valuation,
                            certified_minimal=data.certified_minimal, structure=structure)
    if all_classes:
        def analyze_class(square_class):
            twist = quadratic_twist(curve.rational(), square_class.representative).over(config.p, config.precision)
            record, error = _structure_or_error(twist)
            return ClassStructureRecord(representative=square_class.representative,
                                        class_index=square_class.class_index, structure=record, error=error)
        report.classes = run_tasks(analyze_class, square_class_reps(config.p), config.jobs)
    return report


# -- approximate / verify ---------------------------------------------------

def parse_target(text: str, curve: WeierstrassCurve) -> Tuple[KummerPointY, Optional[int]]:
    """
    A target of Y from ``seed:<n>`` or ``(xi, eta, zeta)`` with p-adic or
    rational literals.

    Raises:
        SurfaceError: literal is not a point of Y
    """
    text = text.strip()
    if text.startswith("seed:"):
        seed = int(text.split(":", 1)[1])
        return sample_y_point(curve, seed), seed
    body = text[1:-1] if text.startswith("(") and text.endswith(")") else text
    parts = [part.strip() for part in body.split(",")]
    if len(parts) != 3:
        raise CurveError(f"invalid target literal: {text!r} (expected '(xi, eta, zeta)' or 'seed:<n>')", curve)
    values = [parse_padic(part, curve.prime, curve.precision) for part in parts]
    return on_surface(curve, *values), None


def _class_key(curve: WeierstrassCurve, point: KummerPointY) -> Optional[int]:
    try:
        return square_class_of(curve.f(point.xi)).class_index
    except PadicError:
        return None


def approximate_targets(config: RunConfig, targets: List[str], slack: int,
                        height_budget: int) -> ApproximationBatch:
    """Approximate several targets, sharing suitable-twist certificates across them."""
    curve = config_curve(config)
    parsed = [parse_target(text, curve) for text in targets]
    certificates: Dict[int, TwistCertificate] = {}
    batch = ApproximationBatch(config=config)

    def run(item):
        point, seed = item
        try:
            result = approximate(curve, config.p, point, config.k, certificates, slack=slack,
                                 height_budget=height_budget, seed=seed)
            return ApproximationRecord.from_result(result, curve.a, curve.b, config.precision), None
        except ApproximationError as error:
            return None, error

    if config.jobs > 1 and parsed:
        # the first target of each square class builds its certificate, the
        # rest only read the filled cache
        leaders, followers, seen = [], [], set()
        for index, (point, _) in enumerate(parsed):
            key = _class_key(curve, point)
            if key is None or key not in seen:
                leaders.append(index)
                seen.add(key)
            else:
                followers.append(index)
        outcomes = [None] * len(parsed)
        for index in leaders:
            outcomes[index] = run(parsed[index])
        for index, outcome in zip(followers, run_tasks(run, [parsed[i] for i in followers], config.jobs)):
            outcomes[index] = outcome
    else:
        outcomes = [run(item) for item in parsed]
    for record, error in outcomes:
        if record is not None:
            batch.results.append(record)
        else:
            batch.failures.append(str(error))
            if len(parsed) == 1:
                raise error
    return batch


def record_to_result(record: ApproximationRecord) -> Tuple[WeierstrassCurve, ApproximationResult]:
    """
    Rebuild an approximation result from its JSON record.

    Raises:
        CurveError, PadicError: malformed fields
    """
    curve = WeierstrassCurve(Fraction(record.a), Fraction(record.b), record.p, record.precision)
    xi, eta, zeta = (parse_padic(text, record.p, record.precision) for text in record.target)
    if len(record.G) != 2:
        raise CurveError(f"generator must be a pair of rationals, got {record.G}", curve)
    generator = CurvePoint(Fraction(record.G[0]), Fraction(record.G[1]))
    coordinates = tuple(Fraction(value) for value in record.coords) if record.coords else None
    result = ApproximationResult(
        prime=record.p,
        k=record.k,
        c=Fraction(record.c),
        d0=record.d0,
        generator=generator,
        n1=record.n1,
        n2=record.n2,
        achieved_exponent=record.achieved,
        target=KummerPointY(xi, eta, zeta),
        rational_coordinates=coordinates,
        seed=record.seed,
    )
    return curve, result


def verify_record(record: ApproximationRecord) -> VerificationRecord:
    """Recompute everything in a record; stored intermediate values are never trusted."""
    curve, result = record_to_result(record)
    report = verify_approximation(curve, result)
    if not report.passed:
        failed = [name for name, ok in report.checks.items() if not ok]
        logger.info("verification failed: %s", ", ".join(failed))
    return VerificationRecord.from_report(report)


def load_certificate(path: str) -> ApproximationRecord:
    """
    Raises:
        ValueError: file is not an approximation certificate
    """
    with open(path) as handle:
        return ApproximationRecord.model_validate_json(handle.read())
