#!/usr/bin/env python3
"""
Tests for the command-line interface and its exit codes
"""

import json

import pytest
from click.testing import CliRunner

from main import cli


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


def test_analyze_json(runner):
    result = runner.invoke(cli, ["--p", "11", "--json", "analyze", "a=1", "b=0"])
    assert result.exit_code == 0, result.stderr
    report = json.loads(result.stdout)
    assert report["structure"]["procyclic"]
    assert report["structure"]["evidence"]["status"] == "procyclic"
    assert report["structure"]["Q"] == 12 and report["structure"]["M"] == 12
    assert report["reduction"]["kodaira"] == "I0"
    assert report["config"]["command"] == "analyze"


def test_analyze_table(runner):
    result = runner.invoke(cli, ["--p", "11", "analyze", "a=1", "b=0"])
    assert result.exit_code == 0
    assert "procyclic" in result.stdout


def test_missing_prime_is_a_usage_error(runner):
    result = runner.invoke(cli, ["analyze", "a=1", "b=0"])
    assert result.exit_code == 2


def test_composite_prime_is_rejected(runner):
    result = runner.invoke(cli, ["--p", "12", "analyze", "a=1", "b=0"])
    assert result.exit_code == 2


def test_bad_curve_literal(runner):
    result = runner.invoke(cli, ["--p", "11", "analyze", "a=1"])
    assert result.exit_code == 2


def test_multiplicative_reduction_exit_code(runner):
    result = runner.invoke(cli, ["--p", "5", "analyze", "a=-3", "b=7"])
    assert result.exit_code == 3


def test_sample(runner):
    result = runner.invoke(cli, ["--p", "11", "sample", "a=1", "b=0", "--count", "2"])
    assert result.exit_code == 0
    lines = result.stdout.strip().splitlines()
    assert len(lines) == 2
    assert all(line.startswith("(") and "O(11^" in line for line in lines)


def test_approximate_then_verify(runner, tmp_path):
    result = runner.invoke(cli, ["--p", "11", "--k", "3", "--json", "approximate", "a=1", "b=0",
                                 "--target", "seed:7"])
    assert result.exit_code == 0, result.stderr
    record = json.loads(result.stdout)
    assert record["achieved"] >= 3
    path = tmp_path / "cert.json"
    path.write_text(result.stdout)

    verified = runner.invoke(cli, ["--json", "verify", str(path)])
    assert verified.exit_code == 0, verified.stdout
    assert json.loads(verified.stdout)["passed"]

    record["n1"] += 1
    record["coords"] = None
    path.write_text(json.dumps(record))
    tampered = runner.invoke(cli, ["verify", str(path)])
    assert tampered.exit_code == 5


def test_verify_unreadable_file(runner, tmp_path):
    result = runner.invoke(cli, ["verify", str(tmp_path / "missing.json")])
    assert result.exit_code == 2
    path = tmp_path / "junk.json"
    path.write_text("not json")
    result = runner.invoke(cli, ["verify", str(path)])
    assert result.exit_code == 2


def test_cm_demo_rejects_unsupported_prime(runner):
    result = runner.invoke(cli, ["cm-demo", "--primes", "13"])
    assert result.exit_code == 2


def test_selftest(runner):
    result = runner.invoke(cli, ["--json", "selftest"])
    assert result.exit_code == 0, result.stdout
    rows = json.loads(result.stdout)
    assert rows and all(row["passed"] for row in rows)


@pytest.mark.parametrize("arguments", [
    ["--p", "11", "--json", "analyze", "a=1", "b=0", "--all-classes"],
    ["--p", "11", "--k", "3", "--json", "approximate", "a=1", "b=0", "--target", "seed:2"],
])
def test_json_output_is_reproducible(runner, arguments):
    first = runner.invoke(cli, arguments)
    second = runner.invoke(cli, arguments)
    assert first.exit_code == 0, first.stderr
    assert first.stdout_bytes == second.stdout_bytes
