"""Symmetry catalog: generator formulas, determining system and invariance."""

from fractions import Fraction

import numpy as np
import pytest

from vcgardner import symbols as S
from vcgardner.evaluate import evaluate
from vcgardner.expr import Num, expand
from vcgardner.jets import JetPoint, SamplingSpec, check_identity
from vcgardner.model import canonical, spec_for
from vcgardner.parser import parse
from vcgardner.symmetries import (
    CaseError, Generator, SymmetryCase, case2_beta, classify, combination,
    determining_residuals, generators_for, invariance_residual, invariant_surface,
)

CASE1 = SymmetryCase("case1", {"n": 2, "a": 1, "b": 3, "c": 0, "d": 1})


def holds(e, eq, tol=1e-9, **kw):
    return check_identity(e, eq, spec_for(eq), tol=tol, **kw).holds


def all_rows_hold(gen, eq):
    return all(holds(r, eq) for r in determining_residuals(gen, eq))


def test_case1_generator_formula():
    v1, v2 = generators_for(CASE1)
    assert v1.xi == parse("1") and v1.tau == parse("0")
    assert v2.tau == parse("3*t")
    assert v2.xi == parse("x")
    assert v2.eta == parse("-1/2*u")


def test_case2_log_branch_of_beta():
    case = SymmetryCase("case2", {"a": parse("a"), "b": parse("b"), "c": parse("c"),
                                  "d": Num(Fraction(1, 2))}, t_domain=(0.1, 2.0))
    assert case2_beta(case) == parse("1/12*a^2*log(b*t + c)")


def test_case3_with_constant_q():
    q0 = 0.7
    case = SymmetryCase("case3", {"Q": parse("7/10"), "a": parse("a"), "b": parse("b"),
                                  "c": parse("c")})
    v_tau, v_beta = generators_for(case)
    env = {"t": np.linspace(0.1, 2.0, 7), "a": 1.3, "b": 0.4, "c": -0.2}
    assert np.allclose(evaluate(v_tau.tau, env), 1.3 / np.sqrt(2 * q0 ** 2), rtol=1e-14)
    beta = 0.4 / q0 * (1 - np.exp(-q0 * env["t"])) - 0.2
    assert np.allclose(evaluate(v_beta.xi, env), beta, rtol=1e-13)


def test_translation_has_identically_zero_rows():
    eq = canonical(A=parse("A"), Q=parse("Q"), n=parse("n"))
    rows = determining_residuals(generators_for(SymmetryCase("arbitrary"))[0], eq)
    assert [expand(r) for r in rows] == [parse("0")] * 5
    assert expand(invariance_residual(Generator(0, 1, 0), eq)) == parse("0")


@pytest.mark.parametrize("case", [
    CASE1,
    SymmetryCase("case1", {"n": parse("3/2"), "a": 2, "b": 1, "c": 1, "d": parse("2/5")}),
    SymmetryCase("case2", {"a": 1, "b": 2, "c": 1, "d": 1}),
    SymmetryCase("case2", {"a": 1, "b": 2, "c": 1, "d": parse("1/2")}),
    SymmetryCase("case2", {"a": parse("3/2"), "b": 1, "c": 2, "d": parse("2/3")}),
    SymmetryCase("case3", {"Q": 1, "a": 1, "b": 1, "c": 1}),
    SymmetryCase("case3", {"Q": parse("1/(t + 1)"), "a": 2, "b": 1, "c": 0}),
])
def test_catalog_generators_pass_both_certificates(case):
    eq = case.equation()
    for gen in generators_for(case):
        rows = all_rows_hold(gen, eq)
        inv = holds(invariance_residual(gen, eq), eq)
        assert rows and inv, gen.label


def test_d_is_not_constrained_by_v2():
    # tau Q_t = -b Q cancels 3 xi_x Q = b Q, so any d keeps v2 a symmetry
    v2 = generators_for(CASE1)[1]
    eq = CASE1.equation()
    other = canonical(A=eq.A, Q=parse("11/10/(3*t)"), n=2, t_domain=eq.t_domain)
    assert all_rows_hold(v2, other)


@pytest.mark.parametrize("A, n", [
    ("(3*t)^(-3/10)", 2),            # exponent of A off by 10%
    ("(3*t)^(-1/3)", parse("11/5")),  # n off by 10%
    ("(3*t + 3/10)^(-1/3)", 2),       # line shifted
])
def test_perturbed_case1_equation_breaks_v2(A, n):
    v2 = generators_for(CASE1)[1]
    bad = canonical(A=parse(A), Q=parse("1/(3*t)"), n=n, t_domain=(0.1, 2.0))
    assert not all_rows_hold(v2, bad)
    assert not holds(invariance_residual(v2, bad), bad)


def test_non_symmetry_is_rejected():
    eq = canonical(A=1, Q=1, n=1)
    gen = Generator(S.t, parse("x^2"), S.u)
    assert not holds(invariance_residual(gen, eq), eq)
    assert not all_rows_hold(gen, eq)


def test_linear_combinations_are_generators():
    v1, v2 = generators_for(CASE1)
    k = parse("5/2")
    g = combination([v2, v1], [1, k])
    assert g.xi == parse("5/2 + x")
    eq = CASE1.equation()
    assert holds(invariance_residual(g, eq), eq)
    lhs = invariance_residual(v2.scale(3), eq)
    assert holds(lhs - 3 * invariance_residual(v2, eq), eq)


def test_invariant_surface_values():
    v1, v2 = generators_for(CASE1)
    p = JetPoint(t=1.0, x=0.5, u_derivs={(0, 0): 2.0, (1, 0): 3.0, (0, 1): 0.0})
    assert invariant_surface(v1, p) == 0
    assert invariant_surface(Generator(1, 0, 0), p) == -3
    q = JetPoint(t=2.0, x=0.5, u_derivs={(0, 0): 2.0, (1, 0): 3.0, (0, 1): 4.0})
    # W = -u/2 - 3t u_t - x u_x
    assert invariant_surface(v2, q) == pytest.approx(-1.0 - 18.0 - 2.0)


def test_case_constraints():
    with pytest.raises(CaseError):
        SymmetryCase("case1", {"n": 1, "a": 1, "b": 1, "c": 1, "d": 1}).equation()
    with pytest.raises(CaseError):
        SymmetryCase("case1", {"n": 2, "a": 1, "b": 0, "c": 1, "d": 1}).equation()
    with pytest.raises(CaseError):
        SymmetryCase("case2", {"a": 1, "b": 1, "c": -1, "d": 1}).equation()
    with pytest.raises(CaseError):   # 2Q^2 + Q_t < 0 near t = 0.2
        generators_for(SymmetryCase("case3", {"Q": parse("1/(t + 1) - 3*t"), "a": 1, "b": 1,
                                              "c": 0}, t_domain=(0.1, 0.3)))


@pytest.mark.parametrize("A, Q, n, want", [
    ("(3*t)^(-1/3)", "1/(3*t)", 2, {"case": "case1", "b": "3", "d": "1"}),
    ("(2*t + 1)^(-1)", "2/(2*t + 1)", 1, {"case": "case2", "d": "1"}),
    ("0", "t + 1", parse("1/2"), {"case": "case3"}),
    ("t", "1", 1, {"case": "arbitrary"}),
])
def test_classify_by_structure(A, Q, n, want):
    got = classify(canonical(A=parse(A), Q=parse(Q), n=n, t_domain=(0.1, 2.0))).to_dict()
    assert got["case"] == want.pop("case")
    for k, v in want.items():
        assert got["params"][k] == v


def test_sampling_spec_for_fractional_case_is_positive():
    eq = SymmetryCase("case3", {"Q": 1, "a": 1, "b": 1, "c": 1}).equation()
    assert spec_for(eq, SamplingSpec()).positive_u
