from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import small_rationals
from exact_algebra import IndexRangeError, LegwebError, MultiPoly, P, Q, VariableError, WebSpecError, X, Y
from model_web import (
    WebSpec, depth_of, derivative_depth, graded_weight, index_decompose, q_coefficient_matrix,
    specialization_preserves_rank, u_basic, u_family, u_universal, u_universal_inductive,
    vanishes_at_basepoint, weight_of,
)

pairs = st.integers(min_value=2, max_value=7).flatmap(
    lambda m: st.tuples(st.just(m), st.integers(min_value=0, max_value=2 * m - 2)))


def test_webspec_validation():
    assert WebSpec.default(4).q_values == (0, 1, 2, 3)
    with pytest.raises(WebSpecError):
        WebSpec((Fraction(0), Fraction(0), Fraction(1)))
    with pytest.raises(WebSpecError):
        WebSpec((Fraction(0), Fraction(1)))
    with pytest.raises(WebSpecError):
        WebSpec.default(2)


def test_webspec_json():
    web = WebSpec((Fraction(1, 2), Fraction(-3), Fraction(7, 5)))
    assert web.to_json() == {"d": 3, "q": ["1/2", "-3", "7/5"]}
    assert WebSpec.from_json(web.to_json()) == web
    with pytest.raises(WebSpecError):
        WebSpec.from_json({"d": 4, "q": ["0", "1", "2"]})


@pytest.mark.parametrize("data", [
    {"d": 3, "q": "012"},
    {"d": "three", "q": ["0", "1", "2"]},
    {"d": 3.0, "q": ["0", "1", "2"]},
    {"d": True, "q": ["0", "1"]},
    {"q": ["0", 1.5, "2"]},
    ["0", "1", "2"],
])
def test_webspec_json_rejects_malformed_fields(data):
    with pytest.raises(LegwebError):
        WebSpec.from_json(data)


@pytest.mark.parametrize("m,j,expected", [(2, 0, (1, 0, 0)), (3, 3, (0, 1, 1)), (4, 2, (2, 0, 1))])
def test_index_decompose_examples(m, j, expected):
    assert index_decompose(m, j) == expected


@given(pairs)
def test_index_decompose_constraints(mj):
    m, j = mj
    j0, j1, j2 = index_decompose(m, j)
    assert j0 + j1 + j2 == m - 1
    assert j1 in (0, 1) and j0 >= 0 and j2 >= 0
    assert j1 + 2 * j2 == j


@pytest.mark.parametrize("m,j", [(1, 0), (2, 3), (3, -1), (4, 7)])
def test_index_decompose_range(m, j):
    with pytest.raises(IndexRangeError):
        index_decompose(m, j)


def test_u_basic_identity():
    u0, u1, u2 = u_basic()
    assert u1.evaluate() == 0
    assert (u1 * u1 - Q * u0 * 2 - u2 * 2).is_zero()


def test_u_universal_examples():
    u0, u1, u2 = u_basic()
    assert u_universal(2, 1) == u1
    assert u_universal(3, 2) == u0 * u2


@pytest.mark.parametrize("m", range(2, 9))
def test_closed_form_matches_recursion(m):
    for j in range(2 * m - 1):
        assert u_universal(m, j) == u_universal_inductive(m, j)


@given(pairs)
@settings(max_examples=30)
def test_u_universal_degree_and_basepoint(mj):
    m, j = mj
    u = u_universal(m, j)
    assert u.degree_in('q') == m - 1
    assert vanishes_at_basepoint(u)


@given(pairs)
@settings(max_examples=30)
def test_depth_formula_and_weight(mj):
    m, j = mj
    j0, j1, j2 = index_decompose(m, j)
    u = u_universal(m, j)
    assert depth_of(u) == 2 * j0 + j1 + 2 * j2 <= 2 * m - 2
    assert graded_weight(u) == j


def test_weight_and_depth_examples():
    u0, u1, _ = u_basic()
    assert (weight_of(u0), depth_of(u0)) == (1, 2)
    assert (weight_of(u1), depth_of(u1)) == (1, 1)
    with pytest.raises(VariableError):
        depth_of(MultiPoly.zero())
    with pytest.raises(VariableError):
        weight_of(MultiPoly.zero())


monomials = st.tuples(*(st.integers(min_value=0, max_value=3) for _ in range(4)))
nonzero_polys = st.dictionaries(monomials, small_rationals.filter(lambda v: v != 0), min_size=1,
                                max_size=5).map(MultiPoly.from_terms)


@given(nonzero_polys)
def test_derivative_depth_agrees_with_support_depth(h):
    assert derivative_depth(h) == depth_of(h)


def test_graded_weight_of_inhomogeneous_poly():
    assert graded_weight(X + P) is None
    assert graded_weight(Y) == 0


@pytest.mark.parametrize("m", range(2, 7))
def test_fixed_m_family_is_independent(m):
    polys = [u_universal(m, j) for j in range(2 * m - 1)]
    assert q_coefficient_matrix(polys).rank() == 2 * m - 1


def test_u_family_size():
    assert len(u_family(5)) == 3 + 5 + 7 + 9


@given(small_rationals)
@settings(max_examples=10, deadline=None)
def test_specialization_is_injective(q0):
    polys = [u for _, _, u in u_family(5)]
    assert specialization_preserves_rank(polys, q0)
