#!/usr/bin/env python3
"""
Tests for p-adic arithmetic, squares and Hensel root finding
"""

from fractions import Fraction
from functools import lru_cache

import pytest
from hypothesis import given, settings, strategies as st

from padic_core import (
    NotSquareError,
    PadicError,
    PadicNumber,
    PrecisionError,
    RootSeparationError,
    from_rational,
    hensel_roots,
    is_square,
    parse_padic,
    qp_roots,
    square_class_of,
    square_class_reps,
    sqrt,
)

PRIMES = st.sampled_from([2, 3, 5, 7, 11])
RATIONALS = st.fractions(min_value=-10 ** 6, max_value=10 ** 6, max_denominator=10 ** 4)


@lru_cache(maxsize=None)
def unit_squares(p, exponent):
    modulus = p ** exponent
    return frozenset(x * x % modulus for x in range(1, modulus) if x % p)


def test_valuation_and_unit():
    assert from_rational(50, 1, 5).valuation == 2
    assert from_rational(1, 25, 5).valuation == -2
    assert from_rational(3, 1, 7).unit == 3
    assert (from_rational(1, 3, 5, 10) * 3) == 1


def test_zero_keeps_absolute_precision():
    x = PadicNumber.from_integer(1, 5, 4)
    difference = x - x
    assert difference.is_zero()
    assert not difference.is_exact_zero()
    assert difference.absolute_precision == 4
    assert PadicNumber.zero(5).is_exact_zero()


def test_sum_precision_is_the_smaller_one():
    x = PadicNumber.from_integer(1, 5, 4)
    y = PadicNumber.from_integer(1, 5, 6)
    assert (x + y).absolute_precision == 4


def test_to_integer_refuses_missing_digits():
    x = PadicNumber.from_integer(7, 5, 3)
    assert x.to_integer(3) == 7
    assert x.to_integer(1) == 2
    with pytest.raises(PrecisionError):
        x.to_integer(4)
    with pytest.raises(PadicError):
        from_rational(1, 5, 5).to_integer(2)


def test_truncate_is_close():
    x = from_rational(1, 3, 7)
    r = x.truncate(5)
    assert r.denominator == 1
    assert (x - r).valuation >= 5


def test_literal_format():
    assert str(PadicNumber.from_integer(7, 5, 3)) == "7 + O(5^3)"
    x = parse_padic("-3/25 + O(5^4)", 5)
    assert x.valuation == -2
    assert str(x) == "-3/25 + O(5^4)"
    assert str(PadicNumber.zero(5)) == "0"
    with pytest.raises(PadicError):
        parse_padic("7 + O(3^3)", 5)
    with pytest.raises(PadicError):
        parse_padic("seven", 5)


@settings(max_examples=100, deadline=None)
@given(PRIMES, RATIONALS)
def test_literal_round_trip(p, q):
    x = PadicNumber.from_fraction(q, p, 12)
    assert str(parse_padic(str(x), p)) == str(x)


@settings(max_examples=200, deadline=None)
@given(PRIMES, RATIONALS, RATIONALS)
def test_field_operations_agree_with_rationals(p, q1, q2):
    x, y = PadicNumber.from_fraction(q1, p, 16), PadicNumber.from_fraction(q2, p, 16)
    assert x + y == PadicNumber.from_fraction(q1 + q2, p, 16)
    assert x - y == PadicNumber.from_fraction(q1 - q2, p, 16)
    assert x * y == PadicNumber.from_fraction(q1 * q2, p, 16)
    if q2 != 0:
        assert x / y == PadicNumber.from_fraction(q1 / q2, p, 16)


def test_is_square():
    assert is_square(from_rational(4, 1, 7))
    assert not is_square(from_rational(3, 1, 7))
    assert not is_square(from_rational(7, 1, 7))
    assert is_square(from_rational(49 * 2, 1, 7))
    assert is_square(from_rational(17, 1, 2))
    assert is_square(from_rational(-7, 1, 2))
    assert not is_square(from_rational(5, 1, 2))
    with pytest.raises(PrecisionError):
        is_square(PadicNumber.zero(7, 10))


@settings(max_examples=200, deadline=None)
@given(PRIMES, st.integers(min_value=1, max_value=10 ** 9))
def test_is_square_matches_squares_mod_p6(p, n):
    if n % p == 0:
        n += 1
    assert is_square(from_rational(n, 1, p)) == (n % p ** 6 in unit_squares(p, 6))


def test_sqrt_branches():
    root = sqrt(from_rational(2, 1, 7))
    assert root.residue() == 3
    assert root * root == 2
    two_adic = sqrt(from_rational(17, 1, 2))
    assert two_adic.to_integer(2) == 1
    assert two_adic * two_adic == 17
    with pytest.raises(NotSquareError):
        sqrt(from_rational(3, 1, 7))


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([3, 5, 7, 11, 13]), st.integers(min_value=1, max_value=10 ** 8))
def test_sqrt_of_squares(p, n):
    x = from_rational(n * n, 1, p)
    root = sqrt(x)
    assert root * root == x


def test_square_class_reps():
    assert [c.representative for c in square_class_reps(7)] == [1, 3, 7, 21]
    assert [c.representative for c in square_class_reps(5)] == [1, 2, 5, 10]
    assert [c.representative for c in square_class_reps(11)] == [1, 2, 11, 22]
    assert [c.representative for c in square_class_reps(2)] == [1, -1, 2, -2, 5, -5, 10, -10]
    assert [c.valuation for c in square_class_reps(11)] == [0, 0, 1, 1]


def test_square_class_of():
    assert square_class_of(Fraction(12), 7).representative == 3
    assert square_class_of(Fraction(28), 7).representative == 7
    assert square_class_of(Fraction(9, 4), 7).representative == 1
    assert square_class_of(Fraction(-7), 2).representative == 1
    with pytest.raises(PadicError):
        square_class_of(Fraction(3))


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([2, 3, 5, 7, 11]), st.integers(min_value=1, max_value=10 ** 6))
def test_every_element_has_one_class(p, n):
    square_class = square_class_of(Fraction(n), p)
    others = [c for c in square_class_reps(p) if c != square_class]
    assert all(not is_square(from_rational(n, c.representative, p)) for c in others)


def test_hensel_roots_simple():
    roots = hensel_roots([-2, 0, 1], 7, 20)
    assert sorted(root.residue() for root in roots) == [3, 4]
    for root in roots:
        assert root * root == 2
        assert root.absolute_precision >= 20


def test_hensel_roots_clustered():
    # x (x - 7^3) (x + 7^3 + 1): two roots agree modulo 7^3
    r = 7 ** 3
    coefficients = [0, -r * (r + 1), 1, 1]
    roots = hensel_roots(coefficients, 7, 12)
    values = sorted(root.to_integer(6) for root in roots)
    assert values == sorted([0, r, (-r - 1) % 7 ** 6])


def test_hensel_roots_repeated_root_does_not_separate():
    with pytest.raises(RootSeparationError):
        hensel_roots([1, -2, 1], 5, 10)


def test_qp_roots_finds_non_integral_roots():
    roots = qp_roots([-1, 11], 11, 12)
    assert len(roots) == 1
    assert roots[0].valuation == -1
    assert roots[0] * 11 == 1
