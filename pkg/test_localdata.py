#!/usr/bin/env python3
"""
Tests for minimal models, Kodaira types and residue curves
"""

from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from elliptic import CurvePoint, WeierstrassCurve
from localdata import (
    ReductionKind,
    UNSUPPORTED,
    count_points_mod_p,
    cubic_roots_mod_p,
    group_structure_mod_p,
    kodaira_type,
    minimal_model_at,
    nonsingular_count_mod_p,
    prime_to_p_torsion_order,
    reduction_data,
    reduction_kind,
    ReductionError,
)

# (a, b, p) -> (label, m)
KODAIRA_TABLE = [
    (1, 0, 5, "I0", 1),
    (0, 5, 5, "II", 1),
    (5, 0, 5, "III", 2),
    (0, 25, 5, "IV", 3),
    (0, 50, 5, "IV", 1),
    (25, 0, 5, "I0*", 4),
    (121, 0, 11, "I0*", 2),
    (0, 625, 5, "IV*", 3),
    (125, 0, 5, "III*", 2),
    (0, 3125, 5, "II*", 1),
    (11, 11, 11, "II", 1),
]


@pytest.mark.parametrize("a, b, p, label, m", KODAIRA_TABLE)
def test_kodaira_table(a, b, p, label, m):
    kodaira = kodaira_type(WeierstrassCurve(a, b), p)
    assert kodaira.label == label
    assert kodaira.component_order == m


def test_kodaira_procyclic_set():
    assert kodaira_type(WeierstrassCurve(0, 5), 5).in_procyclic_set
    assert not kodaira_type(WeierstrassCurve(25, 0), 5).in_procyclic_set
    assert kodaira_type(WeierstrassCurve(1, 0), 3).symbol == UNSUPPORTED


def test_multiplicative_reduction():
    curve = WeierstrassCurve(-3, 7)
    assert reduction_kind(curve, 5) is ReductionKind.MULTIPLICATIVE
    kodaira = kodaira_type(curve, 5)
    assert kodaira.label == "I1"
    assert kodaira.split is False
    assert kodaira.component_order == 1


def test_minimal_model_scaling():
    model = minimal_model_at(WeierstrassCurve(2 * 5 ** 4, 3 * 5 ** 6), 5)
    assert model.scaling_exponent == 1
    assert (model.curve.a, model.curve.b) == (2, 3)
    point = CurvePoint(Fraction(25), Fraction(125))
    assert model.from_minimal(model.to_minimal(point)) == point
    assert model.to_minimal(point) == CurvePoint(Fraction(1), Fraction(1))

    integral = minimal_model_at(WeierstrassCurve(Fraction(1, 5 ** 4), 1), 5)
    assert integral.scaling_exponent == -1
    assert integral.curve.a == 1 and integral.curve.b == 5 ** 6


def test_reduction_kinds():
    assert reduction_kind(WeierstrassCurve(1, 0), 11) is ReductionKind.GOOD
    assert reduction_kind(WeierstrassCurve(121, 0), 11) is ReductionKind.ADDITIVE
    assert reduction_kind(WeierstrassCurve(1, 0), 2) is ReductionKind.ADDITIVE


@pytest.mark.parametrize("p", [3, 7, 11, 19, 23, 31, 43])
def test_supersingular_counts(p):
    curve = WeierstrassCurve(1, 0)
    assert count_points_mod_p(curve, p) == p + 1
    n1, n2 = group_structure_mod_p(curve, p)
    assert n1 * n2 == p + 1


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=-100, max_value=100), st.integers(min_value=-100, max_value=100),
       st.sampled_from([5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43]))
def test_point_counts_respect_the_hasse_bound(a, b, p):
    assume((4 * a ** 3 + 27 * b ** 2) % p != 0)
    trace = p + 1 - count_points_mod_p(WeierstrassCurve(a, b), p)
    assert trace * trace <= 4 * p


def test_group_structure():
    assert count_points_mod_p(WeierstrassCurve(0, 1), 7) == 12
    assert group_structure_mod_p(WeierstrassCurve(0, 1), 7) == (2, 6)
    assert group_structure_mod_p(WeierstrassCurve(1, 0), 11) == (1, 12)
    with pytest.raises(ReductionError):
        count_points_mod_p(WeierstrassCurve(0, 5), 5)


def test_cubic_roots_mod_p():
    assert cubic_roots_mod_p(1, 0, 11) == [0]
    assert cubic_roots_mod_p(1, 0, 5) == [0, 2, 3]
    assert cubic_roots_mod_p(0, 1, 7) == [3, 5, 6]


def test_nonsingular_count_of_additive_reduction():
    assert nonsingular_count_mod_p(WeierstrassCurve(0, 5), 5) == 5


def test_component_order_from_torsion():
    assert prime_to_p_torsion_order(WeierstrassCurve(121, 0, 11, 16)) == 2
    assert prime_to_p_torsion_order(WeierstrassCurve(0, 5, 5, 16)) == 1


def test_reduction_data_record():
    data = reduction_data(WeierstrassCurve(121, 0), 11)
    assert data.kind is ReductionKind.ADDITIVE
    assert data.kodaira == "I0*"
    assert data.component_order == 2
    assert data.residue_count == 11
    assert data.discriminant_valuation == 6
    assert data.scaling_exponent == 0

    good = reduction_data(WeierstrassCurve(1, 0), 11)
    assert good.kodaira == "I0" and good.residue_count == 12
