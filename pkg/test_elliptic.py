#!/usr/bin/env python3
"""
Tests for the group law, twists and division polynomials
"""

import random
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from elliptic import (
    INFINITY_POINT,
    CurveError,
    CurvePoint,
    NotInE0Error,
    SingularCurveError,
    TwistedModel,
    TwistIsomorphism,
    WeierstrassCurve,
    division_polynomial,
    division_polynomial_squared,
    has_qp_torsion,
    is_in_E0,
    parse_curve,
    parse_point,
    point_add,
    point_neg,
    poly_coefficients,
    quadratic_twist,
    scalar_mul,
    torsion_abscissae,
    twist_transport,
)
from padic_core import NotSquareError, PadicNumber, PrecisionError, from_rational, is_square, sqrt, to_padic

# y^2 = x^3 - 2 with P = (3, 5) of infinite order
MORDELL = WeierstrassCurve(0, -2)
P = CurvePoint(Fraction(3), Fraction(5))
# y^2 = x^3 + 1 with (2, 3) of order 6
SIX = WeierstrassCurve(0, 1)


def test_invariants():
    curve = WeierstrassCurve(1, 0)
    assert curve.discriminant == -64
    assert curve.j_invariant == 1728
    assert WeierstrassCurve(0, 1).j_invariant == 0


def test_singular_curves_are_rejected():
    with pytest.raises(SingularCurveError):
        WeierstrassCurve(0, 0)
    with pytest.raises(SingularCurveError):
        WeierstrassCurve(-3, 2)


def test_parse_curve_and_point():
    curve = parse_curve("a=-1/2, b=3")
    assert curve.a == Fraction(-1, 2) and curve.b == 3
    assert parse_curve("a=1 b=0", 11).prime == 11
    assert parse_point("(3, 5)", MORDELL) == P
    assert parse_point("inf", MORDELL).is_infinity
    with pytest.raises(CurveError):
        parse_point("(3, 4)", MORDELL)
    with pytest.raises(CurveError):
        parse_curve("y^2 = x^3 + 1")


def test_doubling_on_mordell_curve():
    assert point_add(MORDELL, P, P) == CurvePoint(Fraction(129, 100), Fraction(-383, 1000))


def test_torsion_point_orders():
    point = CurvePoint(Fraction(2), Fraction(3))
    assert scalar_mul(SIX, 2, point) == CurvePoint(Fraction(0), Fraction(1))
    assert scalar_mul(SIX, 3, point) == CurvePoint(Fraction(-1), Fraction(0))
    assert scalar_mul(SIX, 6, point).is_infinity
    assert point_add(SIX, point, point_neg(SIX, point)).is_infinity
    assert scalar_mul(SIX, -1, point) == point_neg(SIX, point)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=6), st.integers(min_value=0, max_value=6))
def test_scalar_multiplication_is_additive(m, n):
    assert scalar_mul(MORDELL, m + n, P) == point_add(MORDELL, scalar_mul(MORDELL, m, P), scalar_mul(MORDELL, n, P))


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=5), st.integers(min_value=1, max_value=5),
       st.integers(min_value=1, max_value=5))
def test_associativity_over_q(i, j, k):
    p1, p2, p3 = (scalar_mul(MORDELL, n, P) for n in (i, j, k))
    p3 = point_neg(MORDELL, p3)
    left = point_add(MORDELL, point_add(MORDELL, p1, p2), p3)
    right = point_add(MORDELL, p1, point_add(MORDELL, p2, p3))
    assert left == right


def test_padic_sums_stay_on_the_curve():
    curve = WeierstrassCurve(1, 0, 11, 24)
    points = [point for point in (curve.lift_x(x) for x in range(12)) if point is not None]
    assert len(points) >= 4
    for first in points:
        for second in points:
            assert curve.contains(point_add(curve, first, second))


def test_ambiguous_padic_addition_raises():
    x = from_rational(1, 1, 7, 5)
    first = CurvePoint(x, from_rational(1, 1, 7, 5))
    second = CurvePoint(x, from_rational(2, 1, 7, 5))
    with pytest.raises(PrecisionError):
        point_add(WeierstrassCurve(1, 0, 7, 5), first, second)


def test_is_in_E0():
    assert is_in_E0(SIX, CurvePoint(Fraction(2), Fraction(3)))
    assert not is_in_E0(SIX, CurvePoint(Fraction(-1), Fraction(0)))
    assert not is_in_E0(SIX, INFINITY_POINT)
    padic = WeierstrassCurve(0, 1, 7, 10)
    with pytest.raises(NotInE0Error):
        is_in_E0(padic, CurvePoint(from_rational(-1, 1, 7), PadicNumber.zero(7, 5)))


def test_lift_x():
    curve = WeierstrassCurve(1, 0, 7, 20)
    point = curve.lift_x(1)
    assert point is not None and curve.contains(point)
    assert curve.lift_x(2) is None  # f(2) = 3 is not a square mod 7
    assert WeierstrassCurve(0, 1).lift_x(2) == CurvePoint(Fraction(2), Fraction(3))
    assert WeierstrassCurve(0, 1).lift_x(1) is None


def test_quadratic_twist_coefficients():
    twist = quadratic_twist(WeierstrassCurve(1, 3), 2)
    assert (twist.a, twist.b) == (4, 24)
    with pytest.raises(CurveError):
        quadratic_twist(WeierstrassCurve(1, 0), 0)


def test_twisted_model_maps_to_short_model():
    model = TwistedModel(WeierstrassCurve(1, 0), 2)
    point = model.point(1, 1)
    short = model.to_short(point)
    assert short == CurvePoint(Fraction(2), Fraction(4))
    assert model.short_model.contains(short)
    assert model.from_short(short) == point
    assert model.contains(model.add(point, point))
    assert model.multiply(3, point) == model.add(point, model.add(point, point))
    with pytest.raises(CurveError):
        model.point(1, 2)


def test_twist_isomorphism_over_q7():
    curve = WeierstrassCurve(1, 0, 7, 20)
    point = curve.lift_x(1)
    isomorphism = TwistIsomorphism(1, 2, 7, 20)
    moved = isomorphism.forward(point)
    assert TwistedModel(curve.rational(), 2).contains(moved)
    assert isomorphism.backward(moved) == point
    assert twist_transport(point, 1, 2, 7, 20) == moved
    with pytest.raises(NotSquareError):
        TwistIsomorphism(1, 3, 7, 20).forward(point)


def test_division_polynomial_degrees():
    curve = WeierstrassCurve(2, 3)
    for n in range(2, 7):
        assert division_polynomial_squared(curve, n).degree() == n * n - 1
    assert division_polynomial(curve, 3).degree() == 4
    assert division_polynomial(curve, 2).degree() == 3
    with pytest.raises(CurveError):
        division_polynomial(curve, 1)


def test_division_polynomial_vanishes_on_torsion():
    # (0, 1) has order 3 on y^2 = x^3 + 1 and (-1, 0) order 2
    assert division_polynomial(SIX, 3).eval(0) == 0
    assert division_polynomial(SIX, 2).eval(-1) == 0
    assert division_polynomial(SIX, 6).eval(2) == 0
    assert division_polynomial(SIX, 3).eval(2) != 0


def test_torsion_scans():
    over_7 = SIX.over(7, 16)
    over_5 = SIX.over(5, 16)
    assert len(torsion_abscissae(over_7, 2)) == 3
    assert len(torsion_abscissae(over_5, 2)) == 1
    three = torsion_abscissae(over_7, 3)
    assert len(three) == 1 and three[0].is_zero()
    assert has_qp_torsion(over_7, 3)
    assert has_qp_torsion(over_5, 2)
    with pytest.raises(CurveError):
        has_qp_torsion(over_7, 11)


def _padic_pool(curve, c=1):
    # points of c y^2 = f(x) with small abscissae, both signs
    pool = []
    for x in range(1, 30):
        value = to_padic(curve.rational().f(Fraction(x)) / c, curve.prime, curve.precision)
        if not value.is_zero() and is_square(value):
            y = sqrt(value)
            pool += [CurvePoint(curve.element(x), y), CurvePoint(curve.element(x), -y)]
    return pool


def test_padic_group_law_on_random_triples():
    curve = WeierstrassCurve(1, 0, 11, 24)
    pool = _padic_pool(curve) + [INFINITY_POINT]
    rng = random.Random(11)
    for _ in range(1000):
        first, second, third = (rng.choice(pool) for _ in range(3))
        left = point_add(curve, point_add(curve, first, second), third)
        right = point_add(curve, first, point_add(curve, second, third))
        assert left == right
        assert point_add(curve, first, second) == point_add(curve, second, first)
        assert point_add(curve, first, point_neg(curve, first)).is_infinity


@pytest.mark.parametrize("c, d", [(1, 5), (2, 18), (3, 27)])
def test_twist_isomorphism_is_a_homomorphism(c, d):
    curve = WeierstrassCurve(1, 0, 11, 24)
    source, target = TwistedModel(curve.rational(), c), TwistedModel(curve.rational(), d)
    isomorphism = TwistIsomorphism(c, d, 11, 24)
    pool = _padic_pool(curve, c)
    assert len(pool) >= 4
    for first in pool[:6]:
        for second in pool[:6]:
            image = isomorphism.forward(source.add(first, second))
            assert target.contains(image)
            assert image == target.add(isomorphism.forward(first), isomorphism.forward(second))


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=-50, max_value=50), st.integers(min_value=-50, max_value=50),
       st.fractions(min_value=-100, max_value=100, max_denominator=20).filter(lambda c: c != 0))
def test_twists_keep_the_j_invariant(a, b, c):
    assume(4 * a ** 3 + 27 * b ** 2 != 0)
    curve = WeierstrassCurve(a, b)
    assert quadratic_twist(curve, c).j_invariant == curve.j_invariant


def _add_mod_p(first, second, a, p):
    if first is None:
        return second
    if second is None:
        return first
    (x1, y1), (x2, y2) = first, second
    if x1 == x2 and (y1 + y2) % p == 0:
        return None
    if first == second:
        slope = (3 * x1 * x1 + a) * pow(2 * y1, -1, p) % p
    else:
        slope = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (slope * slope - x1 - x2) % p
    return x3, (slope * (x1 - x3) - y1) % p


def _torsion_abscissae_mod_p(a, b, p, ell):
    found = set()
    for x in range(p):
        for y in range(p):
            if (y * y - x ** 3 - a * x - b) % p:
                continue
            multiple = None
            for _ in range(ell):
                multiple = _add_mod_p(multiple, (x, y), a, p)
            if multiple is None:
                found.add(x)
    return found


@pytest.mark.parametrize("a, b, p", [(1, 1, 13), (2, 3, 17), (-1, 4, 19), (3, 5, 23)])
@pytest.mark.parametrize("ell", [3, 5])
def test_division_polynomial_roots_are_torsion_mod_p(a, b, p, ell):
    curve = WeierstrassCurve(a, b)
    coefficients = [int(value) for value in poly_coefficients(division_polynomial(curve, ell))]
    roots = {x for x in range(p) if sum(value * x ** i for i, value in enumerate(coefficients)) % p == 0}
    torsion = _torsion_abscissae_mod_p(a, b, p, ell)
    assert torsion <= roots
    squares = {y * y % p for y in range(1, p)}
    assert {x for x in roots if (x ** 3 + a * x + b) % p in squares} == torsion
