"""Jet calculus: total derivatives, prolongation, Euler operators, on-shell reduction."""

import pytest

from vcgardner import symbols as S
from vcgardner.expr import expand, partial
from vcgardner.jets import (
    Dt, Dx, GeneratorError, SamplingError, SamplingSpec, characteristic, check_identity,
    euler_operator, higher_euler, on_shell_reduce, prolong3, sample_batch, sample_jets,
)
from vcgardner.model import GardnerEquation, canonical
from vcgardner.parser import parse
from vcgardner.symmetries import Generator


def same(a, b, **kw):
    return check_identity(a - b, arbitrary=True, **kw).holds


def test_partial_of_weighted_energy_uses_h_t_equals_q():
    e = parse("exp(2*H)*u^2")
    assert same(partial(e, S.t), parse("2*Q*exp(2*H)*u^2"))


def test_total_t_derivative_of_weighted_energy():
    got = Dt(parse("exp(2*H)*u^2"))
    assert same(got, parse("2*Q*exp(2*H)*u^2 + 2*exp(2*H)*u*u_t"))


def test_total_x_derivative_reaches_explicit_x_and_jets():
    got = Dx(parse("x*u^n*u_x"))
    want = parse("u^n*u_x + x*n*u^(n-1)*u_x^2 + x*u^n*u_xx")
    assert same(got, want)
    assert Dx(S.A) == parse("0")


def test_dx_iterates_and_respects_jet_cap():
    assert Dx(S.u, 3) == S.jet("u", 0, 3)
    with pytest.raises(Exception):
        Dx(S.u, 8)


def test_prolongation_of_u_scaling_on_u_x():
    assert prolong3((0, 0, S.u), S.u_x) == S.u_x


def test_prolongation_of_galilean_like_field():
    # v = t d_x : zeta^x = D_x(-t u_x) + t u_xx = 0, zeta^t = D_t(-t u_x) + t u_xt = -u_x
    gen = (0, S.t, 0)
    assert expand(prolong3(gen, S.u_x)) == parse("0")
    assert expand(prolong3(gen, S.u_t)) == parse("-u_x")


def test_characteristic_is_eta_minus_tau_ut_minus_xi_ux():
    w = characteristic(S.t, S.x, S.u)
    assert w == parse("u - t*u_t - x*u_x")


def test_generator_arguments_are_checked():
    with pytest.raises(GeneratorError):
        Generator(S.x, S.x, S.u)      # tau may depend on t only
    with pytest.raises(GeneratorError):
        Generator(0, S.u, S.u)        # xi may not depend on u


def test_euler_operator_of_u_x_squared():
    assert expand(euler_operator(parse("u_x^2"))) == parse("-2*u_xx")


def test_euler_operator_includes_time_derivatives_unless_spatial_only():
    e = parse("u*u_t")
    assert expand(euler_operator(e)) == parse("0")
    assert expand(euler_operator(e, spatial_only=True)) == parse("u_t")


def test_higher_euler_first_order_term():
    e = parse("u*u_x^2")
    got = higher_euler(e, 1)
    # E^(1) = d/du_x - 2 D_x d/du_xx + ... = 2 u u_x
    assert expand(got) == parse("2*u*u_x")


def test_on_shell_reduction_of_u_tx():
    eq = canonical(n=1)
    got = on_shell_reduce(S.jet("u", 1, 1), eq)
    want = -Dx(parse("u^2*u_x + u_xxx"))
    assert expand(got - want) == parse("0")


def test_on_shell_reduction_of_second_time_derivative_is_consistent():
    eq = canonical(A=parse("A"), Q=parse("Q"), n=parse("n"))
    rhs = eq.evolution_rhs()
    got = on_shell_reduce(S.jet("u", 2, 0), eq)
    assert check_identity(got - on_shell_reduce(Dt(rhs), eq), arbitrary=True,
                          spec=SamplingSpec(positive_u=True)).holds


def test_identity_check_rejects_a_false_identity_and_reports_worst_point():
    v = check_identity(parse("u_x*u - u"), arbitrary=True)
    assert not v.holds
    assert v.worst_point is not None and v.max_rel_residual > 1e-3


def test_sampling_is_deterministic_for_a_seed():
    a = sample_jets(SamplingSpec(count=5, seed=3))
    b = sample_jets(SamplingSpec(count=5, seed=3))
    c = sample_jets(SamplingSpec(count=5, seed=4))
    assert [p.to_dict() for p in a] == [p.to_dict() for p in b]
    assert [p.to_dict() for p in a] != [p.to_dict() for p in c]


def test_positive_u_and_guards_are_honoured():
    spec = SamplingSpec(count=200, t_range=(1.5, 2.0), u_range=(0.5, 1.0), positive_u=True,
                        guards=(parse("t - 1"),))
    env = sample_batch(spec).env()
    assert (env["u"] > 0).all() and (env["t"] > 1).all()
    with pytest.raises(SamplingError):
        sample_batch(spec.replace(u_range=(-1.0, 1.0)))
    with pytest.raises(SamplingError):
        sample_batch(spec.replace(t_range=(0.1, 2.0)))


def test_bad_ranges_are_rejected():
    with pytest.raises(SamplingError):
        sample_batch(SamplingSpec(t_range=(2.0, 1.0)))


def test_generic_equation_identity_needs_positive_u():
    eq = GardnerEquation.arbitrary()
    assert eq.fractional
