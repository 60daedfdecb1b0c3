from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import distinct_q_sets, small_rationals
from exact_algebra import (
    ExactMatrix, LegwebError, MultiPoly, P, Q, X, Y, coefficient_rows, format_rational, grlex_key,
    in_span, parse_exponent, parse_rational, rank_nullspace, vandermonde,
)

sx, sy, sp, sq = sympy.symbols('x y p q')


def to_sympy(poly: MultiPoly):
    expr = sympy.Integer(0)
    for (ex, ey, ep, eq), coeff in poly.terms.items():
        expr += sympy.Rational(coeff.numerator, coeff.denominator) * sx ** ex * sy ** ey * sp ** ep * sq ** eq
    return sympy.expand(expr)


monomials = st.tuples(*(st.integers(min_value=0, max_value=3) for _ in range(4)))
polys = st.dictionaries(monomials, small_rationals, max_size=5).map(MultiPoly.from_terms)


@pytest.mark.parametrize("text,expected", [
    ("3", Fraction(3)),
    ("-3/6", Fraction(-1, 2)),
    ("0.25", Fraction(1, 4)),
    (" 7/1 ", Fraction(7)),
])
def test_parse_rational(text, expected):
    assert parse_rational(text) == expected


@pytest.mark.parametrize("bad", ["", "1/0", "abc", "1//2", None, 1.5])
def test_parse_rational_rejects(bad):
    with pytest.raises(LegwebError):
        parse_rational(bad)


def test_format_rational():
    assert format_rational(Fraction(4, 2)) == "2"
    assert format_rational(Fraction(-3, 9)) == "-1/3"


def test_grlex_orders_by_degree_first():
    assert grlex_key((0, 0, 0, 1)) < grlex_key((2, 0, 0, 0))
    assert grlex_key((0, 1, 0, 0)) < grlex_key((1, 0, 0, 0))


def test_u3_0_expands_evaluates_and_prints():
    u = Y - P * X + Q * X * X * Fraction(1, 2)
    assert str(u) == "y - x*p + 1/2*x^2*q"
    assert to_sympy(u) == sympy.expand(sy - sp * sx + sq * sx ** 2 / 2)
    assert u.evaluate(x=2, y=1, p=3, q=4) == Fraction(1 - 6 + 8)


def test_zero_is_canonical():
    assert (X - X).is_zero()
    assert (X - X) == MultiPoly.zero()
    assert (X - X).terms == {}


@given(polys, polys)
def test_product_matches_sympy(a, b):
    assert to_sympy(a * b) == sympy.expand(to_sympy(a) * to_sympy(b))


@given(polys, polys, st.sampled_from(['x', 'y', 'p', 'q']))
def test_leibniz_rule(a, b, var):
    assert (a * b).partial(var) == a.partial(var) * b + a * b.partial(var)


@given(polys, small_rationals)
def test_substitute_q_matches_sympy(a, value):
    expected = sympy.expand(to_sympy(a).subs(sq, sympy.Rational(value.numerator, value.denominator)))
    assert to_sympy(a.substitute_q(value)) == expected
    assert not a.substitute_q(value).uses('q')


@given(polys)
def test_coefficients_in_q_reassemble(a):
    total = MultiPoly.zero()
    for k, part in enumerate(a.coefficients_in_q()):
        assert not part.uses('q')
        total = total + part * Q ** k
    assert total == a


@given(polys)
def test_json_preserves_value(a):
    assert MultiPoly.from_json(a.to_json()) == a


@pytest.mark.parametrize("exps", [[0, 0, 1.9, 0], [0, 0, 1.0, 0], ["a", 0, 0, 0], [0, -1, 0, 0], [0, True, 0, 0], [0, 0, 0]])
def test_json_rejects_bad_exponents(exps):
    with pytest.raises(LegwebError):
        MultiPoly.from_json([{"exps": exps, "coeff": "1"}])


def test_parse_exponent():
    assert parse_exponent(3) == 3
    with pytest.raises(LegwebError):
        parse_exponent("3")


def test_equal_polys_hash_equal():
    assert hash(X * Y + P) == hash(P + Y * X)


def test_coefficient_rows_share_support():
    rows = coefficient_rows([(X, Y), (X + P, MultiPoly.zero())])
    # slot 0 support in graded-lex order is (p, x)
    assert rows == [[0, 1, 1], [1, 1, 0]]


@given(st.lists(st.lists(small_rationals, min_size=4, max_size=4), min_size=1, max_size=5))
@settings(max_examples=50)
def test_rank_matches_sympy(rows):
    matrix = ExactMatrix.from_rows(rows, 4)
    oracle = sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in row] for row in rows])
    assert matrix.rank() == oracle.rank()


@given(st.lists(st.lists(small_rationals, min_size=5, max_size=5), min_size=1, max_size=4),
       st.randoms())
@settings(max_examples=50)
def test_rank_invariant_under_permutations(rows, rnd):
    matrix = ExactMatrix.from_rows(rows, 5)
    row_order = list(range(matrix.rows))
    col_order = list(range(matrix.cols))
    rnd.shuffle(row_order)
    rnd.shuffle(col_order)
    assert matrix.permute_rows(row_order).permute_cols(col_order).rank() == matrix.rank()
    assert matrix.transpose().rank() == matrix.rank()


@given(st.lists(st.lists(small_rationals, min_size=4, max_size=4), min_size=1, max_size=4))
@settings(max_examples=50)
def test_nullspace_vectors_are_annihilated(rows):
    matrix = ExactMatrix.from_rows(rows, 4)
    rank, basis = rank_nullspace(matrix)
    assert rank + len(basis) == 4
    for vector in basis:
        for row in rows:
            assert sum(a * b for a, b in zip(row, vector)) == 0


def test_rref_of_identity():
    reduced, pivots = ExactMatrix.identity(3).rref()
    assert reduced == ExactMatrix.identity(3)
    assert pivots == [0, 1, 2]


def test_zero_matrix_rank():
    assert ExactMatrix.zeros(3, 4).rank() == 0
    assert len(ExactMatrix.zeros(3, 4).nullspace()) == 4


@given(distinct_q_sets(3, 6))
@settings(max_examples=30)
def test_square_vandermonde_has_full_rank(values):
    assert vandermonde(values, len(values)).rank() == len(values)


def test_in_span():
    vectors = [[1, 0, 1], [0, 1, 1]]
    assert in_span(vectors, [2, 3, 5])
    assert not in_span(vectors, [0, 0, 1])
    assert in_span([], [0, 0])
    assert not in_span([], [1, 0])
