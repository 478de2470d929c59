"""Expression core: canonical forms, derivatives, evaluation and the parser."""

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings

from vcgardner import symbols as S
from vcgardner.evaluate import DomainError, UnboundSymbolError, evaluate, evaluate_with_magnitude
from vcgardner.expr import (
    ONE, ZERO, JetOrderError, Num, add, expand, exp, free_symbols, integral, log, mul, partial,
    power, subs,
)
from vcgardner.parser import ParseError, UnknownSymbolError, parse

from strategies import jet_polynomials


@pytest.mark.parametrize("src, canonical", [
    ("x + x", "2*x"),
    ("2*x*x", "2*x^2"),
    ("x - x", "0"),
    ("0*u", "0"),
    ("t/t", "1"),
    ("u^n*u^n", "u^(2*n)"),
    ("sqrt(4)", "2"),
    ("8^(1/3)", "2"),
    ("2^-1", "1/2"),
    ("log(exp(t))", "t"),
    ("exp(2*log(t))", "t^2"),
    ("exp(a*log(t) + t)", "t^a*exp(t)"),
    ("-x^2", "-x^2"),
])
def test_canonical_forms(src, canonical):
    assert parse(src).text == canonical


def test_non_integer_power_of_power_is_not_collapsed():
    # (t^2)^(1/2) = |t|, so folding to t would be wrong for t < 0
    assert parse("(t^2)^(1/2)").text == "(t^2)^(1/2)"


def test_expand_distributes_products_and_integer_powers():
    e = expand(parse("(x + 1)^2*(u + 1)"))
    assert e == parse("1 + u + x^2 + 2*u*x + 2*x + u*x^2")


def test_equality_is_structural_and_hash_consistent():
    a, b = parse("u*x + 1"), parse("1 + x*u")
    assert a == b and hash(a) == hash(b)


SYMPY_CASES = [
    "u^n*u_x + exp(t*u)",
    "sqrt(1 + u^2)*u_xx - log(2 + x^2)*u",
    "(u + t)^(-3)*u_x^2",
    "exp(-t)*u^(3/2)/(1 + x^2)",
]


def _sympy(src):
    names = {"u": sp.Symbol("u"), "u_x": sp.Symbol("u_x"), "u_xx": sp.Symbol("u_xx"),
             "t": sp.Symbol("t"), "x": sp.Symbol("x"), "n": sp.Symbol("n")}
    return sp.sympify(src.replace("^", "**"), locals=names), names


@pytest.mark.parametrize("src", SYMPY_CASES)
@pytest.mark.parametrize("var", ["u", "u_x", "t", "x"])
def test_partial_derivative_matches_sympy(src, var):
    e = parse(src)
    d = partial(e, parse(var))
    ref, names = _sympy(src)
    dref = sp.lambdify(list(names.values()), sp.diff(ref, names[var]), "numpy")
    rng = np.random.default_rng(3)
    env = {k: rng.uniform(0.5, 1.5, 20) for k in names}
    assert np.allclose(evaluate(d, env) * np.ones(20), dref(*env.values()), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("src", SYMPY_CASES)
def test_evaluation_matches_sympy(src):
    ref, names = _sympy(src)
    f = sp.lambdify(list(names.values()), ref, "numpy")
    rng = np.random.default_rng(5)
    env = {k: rng.uniform(0.5, 1.5, 20) for k in names}
    assert np.allclose(evaluate(parse(src), env), f(*env.values()), rtol=1e-13)


def test_function_rules_drive_derivatives():
    assert partial(S.H, S.t) == S.Q
    assert partial(S.L, S.t) == exp(mul(-1, S.H))
    assert partial(S.A, S.t).name == "A_t"
    assert partial(S.A, S.x) == ZERO


def test_subs_and_free_symbols():
    e = parse("a*u + b")
    assert subs(e, {S.a: Num(2)}) == parse("2*u + b")
    assert {s.name for s in free_symbols(e)} == {"a", "b", "u"}


def test_integral_node_evaluates_by_quadrature():
    e = integral(parse("exp(-t^2)"), S.t, 0.0, 2.0)
    got = float(evaluate(e, {"t": 1.0}))
    assert got == pytest.approx(math.sqrt(math.pi) / 2 * math.erf(1.0), rel=1e-9)
    assert partial(e, S.t) == parse("exp(-t^2)")


def test_magnitude_tracks_cancellation():
    val, mag = evaluate_with_magnitude(parse("u - u_x"), {"u": 1e8, "u_x": 1e8})
    # magnitude is the largest summand, the scale a cancellation is judged against
    assert val == 0 and mag == pytest.approx(1e8)


def test_domain_and_unbound_errors():
    with pytest.raises(DomainError):
        evaluate(parse("log(t)"), {"t": -1.0})
    with pytest.raises(UnboundSymbolError):
        evaluate(parse("a*u"), {"u": 1.0})


def test_jet_order_cap():
    with pytest.raises(JetOrderError):
        S.jet("u", 3, 0)
    with pytest.raises(JetOrderError):
        S.jet("u", 0, 8)


@pytest.mark.parametrize("src, where", [("u +", 3), ("u * (x", 6), ("2 $ 3", 2)])
def test_parse_errors_point_at_the_problem(src, where):
    with pytest.raises(ParseError) as err:
        parse(src)
    assert err.value.position == where


def test_unknown_symbol_lists_declared_names():
    with pytest.raises(ParseError) as err:
        parse("zeta*u")
    assert "zeta" in str(err.value) and "declared symbols" in str(err.value)
    with pytest.raises(UnknownSymbolError):
        S.default_table().resolve("zeta")


def test_arithmetic_sugar_builds_the_same_trees():
    u, x = S.u, S.x
    assert expand((u + x) * 2 - x) == add(mul(2, u), x)
    assert (u / u) == ONE
    assert (u ** 2).text == "u^2"
    assert log(exp(u)) == u


@settings(max_examples=60)
@given(jet_polynomials(max_leaves=6))
def test_expand_preserves_value(e):
    rng = np.random.default_rng(0)
    env = {k: rng.uniform(0.5, 1.5, 8) for k in ("u", "u_x", "u_xx", "u_xxx", "t", "x", "A", "Q")}
    a = np.asarray(evaluate(e, env), dtype=float)
    b = np.asarray(evaluate(expand(e), env), dtype=float)
    assert np.allclose(a, b, rtol=1e-9, atol=1e-9)


def test_power_zero_exponent_and_zero_base():
    assert power(S.u, 0) == ONE
    assert power(ZERO, 2) == ZERO
    with pytest.raises(ZeroDivisionError):
        power(ZERO, -1)
