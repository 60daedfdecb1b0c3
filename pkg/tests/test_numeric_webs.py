import math
from itertools import permutations

import numpy as np
import pytest
import sympy

from exact_algebra import LegwebError
from numeric_webs import (
    DomainError, Jet2Scalar, NormalFormField, ExtractedField, Point3, darboux_check, darboux_triples,
    darboux_web, frobenius_solve, jcos, jexp, jsin, jsqrt, jtanh, loop_holonomy, maximal_rank_report,
    maximal_rank_test, model_web_numeric, negative_control_web, normal_form_box, normal_form_coframe,
    normal_form_web, permute_torsion, rectangle_loop, sample_points, structure_residual,
    structure_residuals, torsion_extract, variables,
)

NORMAL_FORMS = [
    ('zero_disc', {'T': 1.0}),
    ('zero_disc', {'T': -1.0}),
    ('zero_disc', {'T': 0.5}),
    ('positive_disc', {'R': 0.5}),
    ('positive_disc', {'R': 1.0}),
    ('positive_disc', {'R': 2.0}),
    ('negative_disc', {'T': 1.0}),
    ('negative_disc', {'T': 0.5}),
    ('negative_disc', {'T': -1.0}),
]


def _samples(case, params, n, seed=0):
    cf = normal_form_coframe(case, params)
    low, high = normal_form_box(case, cf.params)
    return cf, sample_points(cf.domain, n, np.random.default_rng(seed), low, high)


def test_jets_match_symbolic_derivatives():
    sx, sy, sp = sympy.symbols('x y p')
    expr = sympy.exp(sx) * sympy.sin(sy) + sympy.sqrt(sp) * sympy.tanh(sx * sy) / (1 + sp ** 2) - sympy.cos(sp) * sy
    pt = Point3(0.3, -0.7, 1.4)
    x, y, p = variables(pt)
    jet = jexp(x) * jsin(y) + jsqrt(p) * jtanh(x * y) / (1.0 + p * p) - jcos(p) * y
    symbols = (sx, sy, sp)
    at = {sx: pt.x, sy: pt.y, sp: pt.p}
    assert jet.value == pytest.approx(float(expr.subs(at)), abs=1e-12)
    for i, si in enumerate(symbols):
        assert jet.grad[i] == pytest.approx(float(sympy.diff(expr, si).subs(at)), abs=1e-10)
        for j, sj in enumerate(symbols):
            assert jet.hess[i, j] == pytest.approx(float(sympy.diff(expr, si, sj).subs(at)), abs=1e-9)


def test_jet_partial_and_errors():
    x, y, _ = variables(Point3(2.0, 3.0, 0.0))
    f = x * x * y
    fx = f.partial(0)
    assert fx.value == pytest.approx(12.0)
    assert np.allclose(fx.grad, [6.0, 4.0, 0.0])
    assert fx.order == 1
    with pytest.raises(DomainError):
        fx.partial(0)
    with pytest.raises(DomainError):
        Jet2Scalar.constant(0.0).reciprocal()
    with pytest.raises(DomainError):
        jsqrt(Jet2Scalar.constant(-1.0))


def test_zero_disc_coframe_at_origin():
    cf = normal_form_coframe('zero_disc', {'T': 1.0})
    _, E = cf.evaluate(Point3(0.0, 0.0, 0.0))
    assert np.allclose(E, [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    _, E = cf.evaluate(Point3(0.0, 2.0, 0.0))
    assert np.allclose(E[2], [2.0, 0.0, 1.0])


def test_negative_disc_coframe_at_quarter_turn():
    cf = normal_form_coframe('negative_disc', {'T': 1.0})
    _, E = cf.evaluate(Point3(0.0, math.pi / 4.0, 0.0))
    assert E[1, 2] == pytest.approx(1.0 / math.sqrt(2.0))
    assert E[2, 2] == pytest.approx(1.0 / math.sqrt(2.0))


@pytest.mark.parametrize("case,params", NORMAL_FORMS)
def test_structure_equations_hold(case, params):
    cf, samples = _samples(case, params, 100)
    assert max(structure_residual(cf, pt) for pt in samples) < 1e-7


def test_scaled_coframe_breaks_structure_equations():
    cf, samples = _samples('zero_disc', {'T': 1.0}, 5)
    perturbed = cf.scaled(1.0 + 1e-3)
    assert all(structure_residuals(perturbed, pt)[0] > 1e-4 for pt in samples)


@pytest.mark.parametrize("case,params", [
    ('zero_disc', {}), ('zero_disc', {'T': 0.0}), ('positive_disc', {'R': 0.0}),
    ('positive_disc', {'R': -1.0}), ('positive_disc', {'T': 1.0}), ('hyperbolic', {'T': 1.0}),
])
def test_normal_form_parameter_errors(case, params):
    with pytest.raises(LegwebError):
        normal_form_coframe(case, params)


def test_points_outside_the_domain_are_rejected():
    with pytest.raises(DomainError):
        normal_form_coframe('positive_disc', {'R': 1.0}).evaluate(Point3(0.0, 0.0, 0.0))
    with pytest.raises(DomainError):
        normal_form_coframe('negative_disc', {'T': 1.0}).evaluate(Point3(0.0, 0.0, 0.5))
    with pytest.raises(DomainError):
        torsion_extract(negative_control_web(), Point3(0.0, 1.5, 0.2))


@pytest.mark.parametrize("q_values", [(0.0, 1.0, 2.0), (-1.5, 0.25, 3.0)])
def test_model_web_has_no_torsion(q_values):
    web = model_web_numeric(q_values)
    samples = sample_points(web.domain, 10, np.random.default_rng(0), [-1.0, -1.0, -1.0], [1.0, 1.0, 1.0])
    for pt in samples:
        record = torsion_extract(web, pt)
        assert max(abs(v) for v in record.as_tuple()) < 1e-8


def test_zero_disc_web_has_vanishing_curvature():
    _, samples = _samples('zero_disc', {'T': 1.0}, 3)
    web = normal_form_web('zero_disc', {'T': 1.0})
    for pt in samples:
        record = torsion_extract(web, pt)
        assert abs(record.N) < 1e-5
        assert abs(record.L) < 1e-5


def test_torsion_transforms_under_member_swap():
    web = negative_control_web()
    pt = Point3(0.3, 0.4, 0.2)
    swapped = torsion_extract(web.permuted((1, 0, 2)), pt)
    expected = permute_torsion(torsion_extract(web, pt))
    assert np.allclose(swapped.as_tuple(), expected.as_tuple(), rtol=1e-5, atol=1e-5)


def test_permute_torsion_is_an_involution():
    record = torsion_extract(negative_control_web(), Point3(0.1, 0.6, -0.3))
    assert permute_torsion(permute_torsion(record)) == record
    with pytest.raises(LegwebError):
        permute_torsion(record, (1, 3))


@pytest.mark.parametrize("case,params", [
    ('zero_disc', {'T': 1.0}), ('positive_disc', {'R': 1.0}), ('negative_disc', {'T': 1.0}),
])
def test_normal_form_webs_have_maximal_rank(case, params):
    # the first ten of the 100 samples the normal-form command draws with seed 0
    _, samples = _samples(case, params, 100)
    report = maximal_rank_report(normal_form_web(case, params), samples[:10])
    assert report.max_NL < 1e-5
    assert report.max_covariant < 1e-4
    assert report.passed


@pytest.mark.parametrize("case,params", [
    ('zero_disc', {'T': 1.0}), ('positive_disc', {'R': 1.0}), ('negative_disc', {'T': 1.0}),
])
def test_maximal_rank_ignores_member_order(case, params):
    _, samples = _samples(case, params, 5)
    web = normal_form_web(case, params)
    assert all(maximal_rank_test(web.permuted(order), samples) for order in permutations(range(3)))


def test_maximal_rank_needs_samples():
    with pytest.raises(LegwebError):
        maximal_rank_test(model_web_numeric((0.0, 1.0, 2.0)), [])
    with pytest.raises(LegwebError):
        torsion_extract(model_web_numeric((0.0, 1.0, 2.0)), Point3(0.0, 0.0, 0.0), h=0.0)


def test_model_web_has_maximal_rank():
    samples = [Point3(0.1, 0.2, 0.3), Point3(-0.5, 0.4, 1.0)]
    report = maximal_rank_report(model_web_numeric((0.0, 1.0, 2.0)), samples)
    assert report.passed
    assert report.to_json()["samples"] == 2


def test_negative_control_is_not_maximal_rank():
    samples = [Point3(0.0, 0.5, 0.3), Point3(0.2, 0.3, -0.4)]
    web = negative_control_web()
    assert not any(maximal_rank_test(web.permuted(order), samples) for order in permutations(range(3)))


@pytest.mark.parametrize("case,params,center", [
    ('zero_disc', {'T': 1.0}, Point3(0.2, 0.1, 0.3)),
    ('positive_disc', {'R': 1.0}, Point3(0.0, 0.0, 1.25)),
    ('negative_disc', {'T': 1.0}, Point3(0.0, 0.35, 0.0)),
])
def test_normal_form_loop_holonomy_vanishes(case, params, center):
    field = NormalFormField(normal_form_coframe(case, params))
    loop = rectangle_loop(center, (0, 2), 0.1)
    assert loop[0] == loop[-1]
    assert loop_holonomy(field, loop, 1e-3) < 1e-6


def test_negative_control_loop_holonomy_is_visible():
    field = ExtractedField(negative_control_web())
    loop = rectangle_loop(Point3(0.0, 0.5, 0.3), (1, 2), 0.1)
    assert loop_holonomy(field, loop, 2e-2) > 1e-5


def test_zero_initial_value_stays_zero():
    field = NormalFormField(normal_form_coframe('zero_disc', {'T': 1.0}))
    path = [Point3(0.0, 0.0, 0.0), Point3(0.3, 0.2, -0.1)]
    result = frobenius_solve(field, path, 1e-2, initial=np.zeros(3))
    assert np.all(result.endpoint == 0.0)
    assert result.steps == 38


def test_basis_solutions_stay_independent():
    field = NormalFormField(normal_form_coframe('positive_disc', {'R': 1.0}))
    path = [Point3(0.0, 0.0, 1.0), Point3(0.2, 0.1, 1.2), Point3(0.1, -0.1, 1.1)]
    result = frobenius_solve(field, path, 1e-2)
    assert abs(np.linalg.det(result.endpoint)) > 0.5


@pytest.mark.parametrize("case,params,start,end", [
    ('zero_disc', {'T': 1.0}, Point3(0.0, 0.0, 0.0), Point3(1.0, 1.0, 1.0)),
    ('positive_disc', {'R': 1.0}, Point3(0.0, 0.0, 1.0), Point3(0.2, 0.4, 1.38)),
    ('negative_disc', {'T': 1.0}, Point3(0.0, 0.2, -0.3), Point3(0.3, 0.5, 0.1)),
])
def test_rk4_converges_with_fourth_order(case, params, start, end):
    field = NormalFormField(normal_form_coframe(case, params))
    path = [start, end]
    endpoints = [frobenius_solve(field, path, step).endpoint for step in (0.2, 0.1, 0.05)]
    coarse = np.max(np.abs(endpoints[0] - endpoints[1]))
    fine = np.max(np.abs(endpoints[1] - endpoints[2]))
    assert fine > 0.0
    assert coarse / fine > 8.0


def test_rk4_rejects_non_positive_step():
    field = NormalFormField(normal_form_coframe('zero_disc', {'T': 1.0}))
    path = [Point3(0.0, 0.0, 0.0), Point3(0.1, 0.0, 0.0)]
    for step in (0.0, -1e-3):
        with pytest.raises(LegwebError):
            frobenius_solve(field, path, step)


@pytest.mark.parametrize("D_plus,D", [(1.0, 2.0), (1.0, -1.0), (-0.5, 0.25)])
def test_darboux_relations_hold(D_plus, D):
    samples = sample_points(lambda pt: True, 50, np.random.default_rng(3), [-1.0, -1.0, 0.5], [1.0, 1.0, 2.0])
    report = darboux_check(D_plus, D, samples)
    assert report.passed
    assert report.to_json()["samples"] == 50


def test_darboux_relations_on_200_samples():
    samples = sample_points(lambda pt: True, 200, np.random.default_rng(0), [-1.0, -1.0, 0.5], [1.0, 1.0, 2.0])
    report = darboux_check(1.0, 2.0, samples)
    assert report.samples == 200
    assert report.max_sum_residual < 1e-9
    assert report.max_annihilation_residual < 1e-9
    assert report.max_fiber_residual < 1e-12
    assert report.passed


def test_darboux_components_sum_to_zero():
    x, y, p = variables(Point3(0.4, -0.2, 1.3))
    for h1, h2, h3 in darboux_triples(1.0, 2.0, x, y, p):
        assert h1.value + h2.value + h3.value == pytest.approx(0.0, abs=1e-12)


def test_darboux_domain_errors():
    with pytest.raises(LegwebError):
        darboux_check(1.0, 2.0, [])
    with pytest.raises(DomainError):
        darboux_check(1.0, 1.0, [Point3(0.0, 0.0, 1.0)])
    with pytest.raises(DomainError):
        darboux_check(1.0, 2.0, [Point3(0.0, 0.0, 0.0)])
    with pytest.raises(DomainError):
        darboux_web(1.0, 1.0)
