#!/usr/bin/env python3
"""
Tests for run configuration, record models and the service layer
"""

import json
from collections import Counter
from fractions import Fraction

import pandas as pd
import pytest
from pydantic import ValidationError

import kummer_surface
from elliptic import CurveError, WeierstrassCurve
from kummer_surface import sample_y_point
from reports.models import RunConfig, TwistCertificateRecord
from reports.services import (
    analyze_curve,
    approximate_targets,
    emit_json,
    env_int,
    environment_defaults,
    export_csv,
    load_certificate,
    parse_target,
    run_tasks,
    verify_record,
)

CM_11 = WeierstrassCurve(1, 0, 11, 24)


@pytest.fixture(scope="module")
def certificate_record():
    config = RunConfig(command="approximate", a="1", b="0", p=11, k=3)
    batch = approximate_targets(config, ["seed:1"], slack=4, height_budget=5000)
    assert not batch.failures
    return batch.results[0]


def test_run_config_normalizes_rationals():
    config = RunConfig(command="analyze", a=" 2/4 ", b="-3", p=11)
    assert config.a == "1/2" and config.b == "-3"
    assert config.curve_literal == "a=1/2 b=-3"
    assert config.precision == 24 and config.k == 3 and config.jobs == 1


@pytest.mark.parametrize("overrides", [
    {"p": 12},
    {"b": None},
    {"a": "1/0"},
    {"a": "x"},
    {"k": -1},
    {"precision": 0},
    {"jobs": 0},
])
def test_run_config_rejects(overrides):
    fields = {"command": "analyze", "a": "1", "b": "0", "p": 11}
    fields.update(overrides)
    with pytest.raises(ValidationError):
        RunConfig(**fields)


def test_emit_json_is_deterministic():
    config = RunConfig(command="search", p=7)
    text = emit_json(config)
    assert text == emit_json(RunConfig(command="search", p=7))
    keys = list(json.loads(text))
    assert keys == sorted(keys)


def test_certificate_record_uses_class_alias():
    record = TwistCertificateRecord(**{"p": 11, "class": 2, "d0": 11, "c": "11", "c_prime": "1",
                                       "generator": ["1", "1"], "j": 4, "verified": True})
    assert record.class_ == 2
    dumped = json.loads(emit_json(record))
    assert dumped["class"] == 2 and "class_" not in dumped


def test_export_csv(tmp_path):
    rows = [{"p": 11, "status": "procyclic"}, {"p": 7, "status": "not-procyclic"}]
    path = tmp_path / "rows.csv"
    assert export_csv(rows, str(path)) == 2
    df = pd.read_csv(path)
    assert list(df["p"]) == [11, 7]
    assert list(df["status"]) == ["procyclic", "not-procyclic"]


def test_run_tasks_keeps_order():
    assert run_tasks(lambda n: n * n, list(range(10)), jobs=4) == [n * n for n in range(10)]
    assert run_tasks(lambda n: n + 1, [], jobs=4) == []


def test_env_int(monkeypatch):
    monkeypatch.setenv("KUMMER_JOBS", "4")
    assert env_int("KUMMER_JOBS", 1) == 4
    monkeypatch.setenv("KUMMER_JOBS", "many")
    assert env_int("KUMMER_JOBS", 1) == 1
    monkeypatch.delenv("KUMMER_JOBS")
    assert env_int("KUMMER_JOBS", 1) == 1


def test_environment_defaults(monkeypatch):
    monkeypatch.setenv("KUMMER_PRECISION", "30")
    monkeypatch.setenv("KUMMER_LOG_LEVEL", "info")
    defaults = environment_defaults()
    assert defaults["precision"] == 30
    assert defaults["log_level"] == "INFO"


def test_parse_target():
    point, seed = parse_target("seed:3", CM_11)
    assert seed == 3
    assert point == sample_y_point(CM_11, 3)
    point, seed = parse_target("(1 + O(11^24), 1 + O(11^24), 2 + O(11^24))", CM_11)
    assert seed is None
    assert point.zeta == 2
    with pytest.raises(CurveError):
        parse_target("(1, 2)", CM_11)


def test_analyze_all_classes():
    config = RunConfig(command="analyze", a="1", b="0", p=11, jobs=2)
    report = analyze_curve(config, all_classes=True)
    assert report.reduction.kodaira == "I0"
    assert report.structure.status == "procyclic"
    assert report.structure.quotient_order == 12
    assert [entry.representative for entry in report.classes] == [1, 2, 11, 22]
    assert all(entry.structure is not None and entry.structure.procyclic for entry in report.classes)


def test_certificate_round_trip(tmp_path, certificate_record):
    path = tmp_path / "cert.json"
    path.write_text(emit_json(certificate_record))
    loaded = load_certificate(str(path))
    assert loaded == certificate_record
    verdict = verify_record(loaded)
    assert verdict.passed
    assert verdict.achieved >= 3


def test_tampered_certificate_is_rejected(certificate_record):
    tampered = certificate_record.model_copy(update={"n1": certificate_record.n1 + 1, "coords": None})
    verdict = verify_record(tampered)
    assert not verdict.passed
    assert not verdict.checks["within_distance"]


def test_malformed_certificate(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"p": 11}))
    with pytest.raises(ValueError):
        load_certificate(str(path))


def test_analysis_json_uses_record_keys():
    config = RunConfig(command="analyze", a="1", b="0", p=11)
    document = json.loads(emit_json(analyze_curve(config)))
    assert set(document["reduction"]) == {"p", "kind", "kodaira", "m", "residue_count", "scaling"}
    assert document["reduction"]["m"] == 1 and document["reduction"]["scaling"] == 0
    structure = document["structure"]
    assert set(structure) == {"p", "M", "Q", "procyclic", "generator", "evidence"}
    assert structure["M"] == 12 and structure["Q"] == 12 and structure["procyclic"]
    assert len(structure["generator"]) == 2
    evidence = structure["evidence"]
    assert evidence["status"] == "procyclic"
    assert evidence["generator_certificate"]["valid"]
    assert "point" not in evidence["generator_certificate"]
    assert document["discriminant_valuation"] == 0 and document["certified_minimal"]


def test_batch_builds_each_certificate_once(monkeypatch):
    calls = Counter()
    build = kummer_surface.construct_suitable_c

    def counting(curve, p, square_class, k, precision):
        calls[square_class.class_index] += 1
        return build(curve, p, square_class, k, precision)

    monkeypatch.setattr(kummer_surface, "construct_suitable_c", counting)
    config = RunConfig(command="approximate", a="1", b="0", p=11, k=3, jobs=4)
    targets = [f"seed:{seed}" for seed in range(1, 7)]
    batch = approximate_targets(config, targets, slack=4, height_budget=5000)
    assert calls and set(calls.values()) == {1}
    assert not batch.failures
    assert [record.seed for record in batch.results] == list(range(1, 7))


def test_square_factor_in_recorded_c_still_verifies(certificate_record):
    c = Fraction(certificate_record.c) * 9
    x, y = (Fraction(value) for value in certificate_record.G)
    rescaled = certificate_record.model_copy(update={"c": str(c), "G": [str(x), str(y / 3)]})
    verdict = verify_record(rescaled)
    assert verdict.passed, verdict.checks
