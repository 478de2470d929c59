"""The equation class, coefficient functions and the auxiliary H, L."""

import numpy as np
import pytest
from scipy.integrate import quad

from vcgardner import symbols as S
from vcgardner.evaluate import DomainError, evaluate
from vcgardner.expr import expand, partial
from vcgardner.jets import check_identity
from vcgardner.model import (
    CoefficientFn, GardnerEquation, ModelError, TimeMap, antiderivative, build_aux, canonical,
    coefficient_values,
)
from vcgardner.parser import parse


def test_parsed_canonical_residual_matches_the_model():
    text = "u_t + A*u^n*u_x + u^(2*n)*u_x + u_xxx + Q*u"
    e = parse(text)
    assert len(e.terms) == 5
    eq = GardnerEquation.arbitrary()
    assert expand(eq.residual() - e) == parse("0")


def test_half_power_collapses_the_cubic_term():
    eq = canonical(n=parse("1/2"))
    assert expand(eq.residual()) == parse("u_t + u*u_x + u_xxx")


def test_residual_vanishes_on_shell():
    eq = GardnerEquation.arbitrary()
    assert check_identity(eq.residual(), eq, arbitrary=True).holds


def test_simple_evaluations():
    assert evaluate(parse("3*t + x"), {"t": 1.0, "x": 2.0}) == 5
    assert evaluate(parse("u^2"), {"u": 3.0}) == 9
    with pytest.raises(DomainError):
        evaluate(parse("u^(1/2)"), {"u": -1.0})
    a = parse("a*(b*t + c)^(-1/3)")
    assert evaluate(a, {"a": 1.0, "b": 3.0, "c": 0.0, "t": 9.0}) == pytest.approx(1 / 3, rel=1e-15)


def test_partial_power_rules():
    assert partial(parse("u_x^2"), S.u_x) == parse("2*u_x")
    got = partial(parse("A*u^n*u_x"), S.u)
    assert check_identity(got - parse("n*A*u^(n-1)*u_x"), arbitrary=True,
                          spec=None).holds


@pytest.mark.parametrize("q, H", [
    ("3", "3*t"),
    ("2*(3*t + 1)^2", "2*(3*t + 1)^3/9"),
    ("5/(2*t + 1)", "5/2*log(2*t + 1)"),
    ("4*exp(2*t)", "2*exp(2*t)"),
])
def test_antiderivative_table(q, H):
    got = antiderivative(parse(q))
    assert got is not None
    diff = partial(got, S.t) - parse(q)
    assert check_identity(diff, arbitrary=True).holds
    # the table picks a definite representative; compare up to a constant
    ts = np.linspace(0.2, 1.8, 9)
    delta = evaluate(got, {"t": ts}) - evaluate(parse(H), {"t": ts})
    assert np.ptp(delta) < 1e-12


def test_aux_for_constant_q():
    aux = build_aux(parse("3/2"))
    assert aux.provenance == "closed-form"
    ts = np.linspace(0.0, 2.0, 11)
    assert np.allclose(evaluate(aux.H, {"t": ts}), 1.5 * ts, rtol=1e-15)
    assert np.allclose(evaluate(aux.L, {"t": ts}), (1 - np.exp(-1.5 * ts)) / 1.5, rtol=1e-14)


def test_aux_for_zero_q():
    aux = build_aux(parse("0"))
    assert aux.H == parse("0") and aux.L == parse("t")


def test_aux_for_case1_line():
    aux = build_aux(parse("d/(b*t + c)"))
    assert check_identity(partial(aux.H, S.t) - parse("d/(b*t + c)"), arbitrary=True,
                          spec=None, bindings={"b": 3.0, "c": 1.0, "d": 2.0}).holds
    exp_h = np.exp(evaluate(aux.H, {"t": 1.0, "b": 3.0, "c": 1.0, "d": 2.0}))
    assert exp_h == pytest.approx(4.0 ** (2 / 3), rel=1e-14)


def test_numeric_aux_matches_independent_quadrature():
    q = parse("1/(1 + t^4)")
    aux = build_aux(q, (0.0, 2.0))
    assert aux.numeric()
    rng = np.random.default_rng(11)
    for _ in range(20):
        t1, t2 = sorted(rng.uniform(0.0, 2.0, 2))
        got = float(evaluate(aux.H, {"t": t2})) - float(evaluate(aux.H, {"t": t1}))
        ref, _ = quad(lambda s: 1 / (1 + s ** 4), t1, t2, epsabs=1e-14)
        assert abs(got - ref) <= 1e-9
    # L_t = exp(-H) to quadrature tolerance
    ts = np.linspace(0.1, 1.9, 50)
    h = 1e-4
    dl = (evaluate(aux.L, {"t": ts + h}) - evaluate(aux.L, {"t": ts - h})) / (2 * h)
    assert np.allclose(dl, np.exp(-evaluate(aux.H, {"t": ts})), atol=1e-7)


def test_coefficients_must_be_functions_of_t():
    with pytest.raises(ModelError):
        CoefficientFn(parse("x*t"))
    with pytest.raises(ModelError):
        CoefficientFn(parse("u"))


def test_structural_invariants():
    with pytest.raises(ModelError):
        canonical(n=-1)
    with pytest.raises(ModelError):
        GardnerEquation(0, parse("t - 1"), 1, 0, 1)          # B changes sign
    eq = canonical()
    assert set(eq.flags) == {"Q=0", "A=0"}
    assert eq.is_canonical and not eq.fractional
    assert canonical(n=parse("1/2")).fractional


def test_non_canonical_equations_are_refused_where_required():
    eq = GardnerEquation(0, 2, 1, 0, 1)
    with pytest.raises(ModelError):
        eq.require_canonical("x")


def test_coefficient_values_on_a_grid():
    eq = canonical(A=parse("1 + t"), Q=parse("2"))
    vals = coefficient_values(eq, np.array([0.0, 1.0]))
    assert np.allclose(vals["A"], [1.0, 2.0]) and np.allclose(vals["Q"], [2.0, 2.0])


def test_time_map_inversion():
    tm = TimeMap(parse("exp(t) - 1"), (0.0, 2.0))
    target = np.array([0.1, 1.0, 5.0])
    assert np.allclose(tm(tm.invert(target)), target, rtol=1e-11)
    with pytest.raises(ModelError):
        TimeMap(parse("(t - 1)^2"), (0.0, 2.0))
    with pytest.raises(ModelError):
        tm.invert(100.0)
