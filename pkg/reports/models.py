from fractions import Fraction
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator
from sympy import isprime

from elliptic import CurvePoint
from kummer_surface import ApproximationResult, CmReport, VerificationReport
from localdata import ReductionData
from qp_structure import GeneratorCertificate, GroupStructure
from suitability import ClassOutcome, SearchHit, SuitabilityReport


def _rational(value) -> str:
    return str(Fraction(value))


def _point(point: CurvePoint) -> List[str]:
    if point.is_infinity:
        return ["inf"]
    return [str(point.x), str(point.y)]


class RunConfig(BaseModel):
    """Run configuration, recorded into every emitted document"""
    command: str
    a: Optional[str] = Field(None, description="Curve coefficient a (rational literal)")
    b: Optional[str] = Field(None, description="Curve coefficient b (rational literal)")
    p: int = Field(..., description="The prime")
    precision: int = Field(24, description="Working p-adic precision N")
    k: int = Field(3, description="Target exponent")
    seed: int = Field(1, description="Seed for all sampled data")
    json_output: bool = Field(False, description="Emit JSON instead of tables")
    jobs: int = Field(1, description="Worker threads for independent tasks")

    @field_validator('a', 'b')
    @classmethod
    def validate_rational(cls, v):
        if v is None:
            return v
        try:
            return str(Fraction(v.strip()))
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"Invalid rational literal: {v!r}")

    @field_validator('p')
    @classmethod
    def validate_prime(cls, v):
        if not isprime(v):
            raise ValueError(f"{v} is not a prime number")
        return v

    @field_validator('precision')
    @classmethod
    def validate_precision(cls, v):
        if v <= 0:
            raise ValueError("Precision must be positive")
        return v

    @field_validator('k')
    @classmethod
    def validate_k(cls, v):
        if v < 0:
            raise ValueError("Target exponent k cannot be negative")
        return v

    @field_validator('jobs')
    @classmethod
    def validate_jobs(cls, v):
        if v < 1:
            raise ValueError("At least one job is required")
        return v

    @model_validator(mode='after')
    def validate_curve_pair(self):
        if (self.a is None) != (self.b is None):
            raise ValueError("Both a and b must be given")
        return self

    @property
    def curve_literal(self) -> str:
        return f"a={self.a} b={self.b}"


class ReductionRecord(BaseModel):
    """ReductionData as {p, kind, kodaira, m, residue_count, scaling}"""
    prime: int = Field(..., alias="p")
    kind: str
    kodaira: str
    component_order: Optional[int] = Field(None, alias="m")
    residue_count: int
    scaling_exponent: int = Field(..., alias="scaling")

    model_config = {"populate_by_name": True}

    @classmethod
    def from_data(cls, data: ReductionData) -> "ReductionRecord":
        return cls(
            prime=data.prime,
            kind=data.kind.value,
            kodaira=data.kodaira,
            component_order=data.component_order,
            residue_count=data.residue_count,
            scaling_exponent=data.scaling_exponent,
        )


class GeneratorRecord(BaseModel):
    point: List[str]
    quotient_order: int
    image_order: int
    log_valuation: Optional[int] = None
    candidates_tried: int
    valid: bool

    @classmethod
    def from_certificate(cls, certificate: GeneratorCertificate) -> "GeneratorRecord":
        log_valuation = certificate.log_valuation
        return cls(
            point=_point(certificate.point),
            quotient_order=certificate.quotient_order,
            image_order=certificate.image_order,
            log_valuation=None if log_valuation == float("inf") else int(log_valuation),
            candidates_tried=certificate.candidates_tried,
            valid=certificate.valid,
        )


class StructureRecord(BaseModel):
    """
    E(Q_p) ≅ Z_p x Z/MZ as {p, M, Q, procyclic, generator, evidence}.

    The verdict, working model and generator certificate live in evidence.
    """
    prime: int = Field(..., alias="p")
    finite_part: int = Field(..., alias="M")
    quotient_order: int = Field(..., alias="Q")
    procyclic: bool
    generator: Optional[List[str]] = None
    evidence: Dict[str, Any] = Field(default_factory=dict)

    model_config = {"populate_by_name": True}

    @property
    def status(self) -> str:
        return self.evidence.get("status", "unknown")

    @classmethod
    def from_structure(cls, structure: GroupStructure) -> "StructureRecord":
        evidence = {key: value for key, value in structure.evidence.items() if value is not None}
        evidence["status"] = structure.status.value
        evidence["working_model"] = structure.working_model.literal()
        evidence["scaling_exponent"] = structure.scaling_exponent
        generator = None
        if structure.generator is not None:
            certificate = GeneratorRecord.from_certificate(structure.generator)
            evidence["generator_certificate"] = certificate.model_dump(exclude={"point"})
            generator = certificate.point
        return cls(
            prime=structure.prime,
            finite_part=structure.finite_part,
            quotient_order=structure.quotient_order,
            procyclic=structure.procyclic,
            generator=generator,
            evidence=evidence,
        )


class ClassStructureRecord(BaseModel):
    representative: int
    class_index: int
    structure: Optional[StructureRecord] = None
    error: Optional[str] = None


class AnalysisReport(BaseModel):
    config: RunConfig
    curve: str
    reduction: ReductionRecord
    discriminant_valuation: int
    certified_minimal: bool
    structure: Optional[StructureRecord] = None
    error: Optional[str] = None
    classes: List[ClassStructureRecord] = Field(default_factory=list)


class TwistCertificateRecord(BaseModel):
    """Certificate JSON of a suitable twist"""
    p: int
    class_: int = Field(..., alias="class")
    d0: int
    c: str
    c_prime: str
    generator: List[str]
    j: int
    verified: bool
    checks: Dict[str, bool] = Field(default_factory=dict)
    error: Optional[str] = None

    model_config = {"populate_by_name": True}

    @classmethod
    def from_outcome(cls, outcome: ClassOutcome, p: int) -> "TwistCertificateRecord":
        square_class = outcome.square_class
        certificate = outcome.certificate
        if certificate is None:
            return cls(p=p, class_=square_class.class_index, d0=square_class.representative, c="",
                       c_prime="", generator=[], j=0, verified=False, error=outcome.error)
        return cls(
            p=p,
            class_=square_class.class_index,
            d0=certificate.d0,
            c=_rational(certificate.c),
            c_prime=_rational(certificate.c_prime),
            generator=_point(certificate.generator),
            j=certificate.truncation_exponent,
            verified=certificate.verified,
            checks=certificate.checks,
        )


class SuitabilityRecord(BaseModel):
    config: RunConfig
    curve: str
    suitable: bool
    classes: List[TwistCertificateRecord]

    @classmethod
    def from_report(cls, config: RunConfig, report: SuitabilityReport) -> "SuitabilityRecord":
        return cls(
            config=config,
            curve=report.curve.literal(),
            suitable=report.suitable,
            classes=[TwistCertificateRecord.from_outcome(outcome, report.prime) for outcome in report.outcomes],
        )


class SearchHitRecord(BaseModel):
    curve: str
    a: str
    b: str
    kodaira: str
    j_invariant: str
    classes: Dict[str, str]

    @classmethod
    def from_hit(cls, hit: SearchHit) -> "SearchHitRecord":
        return cls(
            curve=hit.curve.literal(),
            a=_rational(hit.curve.a),
            b=_rational(hit.curve.b),
            kodaira=hit.kodaira,
            j_invariant=_rational(hit.j_invariant),
            classes={str(rep): status for rep, status in hit.classes.items()},
        )


class SearchRecord(BaseModel):
    config: RunConfig
    count: int
    curves: List[SearchHitRecord]


class ApproximationRecord(BaseModel):
    """Result JSON of an approximation, verifiable from its own fields"""
    p: int
    k: int
    a: str
    b: str
    precision: int
    target: List[str] = Field(..., description="xi, eta, zeta as p-adic literals")
    d0: int
    c: str
    G: List[str]
    n1: int
    n2: int
    achieved: int
    coords: Optional[List[str]] = None
    seed: Optional[int] = None

    @field_validator('n1', 'n2')
    @classmethod
    def validate_multiplier(cls, v):
        if v < 0:
            raise ValueError("Multipliers are nonnegative")
        return v

    @classmethod
    def from_result(cls, result: ApproximationResult, a, b, precision: int) -> "ApproximationRecord":
        return cls(
            p=result.prime,
            k=result.k,
            a=_rational(a),
            b=_rational(b),
            precision=precision,
            target=[str(value) for value in result.target.coordinates()],
            d0=result.d0,
            c=_rational(result.c),
            G=_point(result.generator),
            n1=result.n1,
            n2=result.n2,
            achieved=result.achieved_exponent,
            coords=[_rational(value) for value in result.rational_coordinates]
            if result.rational_coordinates is not None else None,
            seed=result.seed,
        )


class ApproximationBatch(BaseModel):
    config: RunConfig
    results: List[ApproximationRecord] = Field(default_factory=list)
    failures: List[str] = Field(default_factory=list)


class VerificationRecord(BaseModel):
    passed: bool
    checks: Dict[str, bool]
    achieved: Optional[int] = None
    detail: Optional[str] = None

    @classmethod
    def from_report(cls, report: VerificationReport) -> "VerificationRecord":
        return cls(passed=report.passed, checks=report.checks, achieved=report.achieved_exponent,
                   detail=report.detail)


class DriverCheckRecord(BaseModel):
    prime: int
    name: str
    passed: bool
    detail: str = ""


class CmDriverRecord(BaseModel):
    config: RunConfig
    prime: int
    passed: bool
    kodaira: Dict[str, str]
    checks: List[DriverCheckRecord]
    approximations: List[ApproximationRecord]

    @classmethod
    def from_report(cls, config: RunConfig, report: CmReport, precision: int) -> "CmDriverRecord":
        return cls(
            config=config,
            prime=report.prime,
            passed=report.passed,
            kodaira={str(rep): label for rep, label in report.kodaira.items()},
            checks=[DriverCheckRecord(prime=report.prime, name=check.name, passed=check.passed,
                                      detail=check.detail) for check in report.checks],
            approximations=[ApproximationRecord.from_result(result, 1, 0, precision)
                            for result in report.approximations],
        )


class SelftestRecord(BaseModel):
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0
