"""Formal Lagrangian, adjoint equation and nonlinear self-adjointness."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import symbols as S
from .expr import (
    Expr, ZERO, add, as_expr, free_symbols, is_number, jet_symbols, mul, number_value,
    partial, power, subs,
)
from .jets import Dt, Dx, euler_operator
from .model import AuxFunctions, GardnerEquation, ModelError, build_aux

__all__ = [
    "formal_lagrangian", "adjoint_equation", "printed_adjoint", "Substitution",
    "theorem3_substitution", "substitute_v", "self_adjointness_residual", "SubstitutionError",
]


class SubstitutionError(ModelError):
    pass


def formal_lagrangian(eq: GardnerEquation) -> Expr:
    """v * Delta."""
    return mul(S.v, eq.residual())


def adjoint_equation(eq: GardnerEquation) -> Expr:
    """F* = delta(v Delta)/delta u, computed with the Euler operator."""
    return euler_operator(formal_lagrangian(eq), "u")


def printed_adjoint(eq: GardnerEquation) -> Expr:
    """F* = Q v - u^(2n) v_x - v_xxx - u^n A v_x - v_t, as stated in closed form."""
    eq.require_canonical("printed_adjoint")
    n, A, Q = eq.n, eq.coefficient("A"), eq.coefficient("Q")
    v, v_x = S.v, S.jet("v", 0, 1)
    return add(mul(Q, v), mul(-1, power(S.u, mul(2, n)), v_x), mul(-1, S.jet("v", 0, 3)),
               mul(-1, power(S.u, n), A, v_x), mul(-1, S.jet("v", 1, 0)))


@dataclass(frozen=True)
class Substitution:
    """v = phi(t, x, u) = p(t) u + q(t, x)."""

    p: Expr
    q: Expr
    branch: str = "custom"
    constants: tuple[str, ...] = field(default=("c1", "c2", "c3"))

    def __post_init__(self):
        object.__setattr__(self, "p", as_expr(self.p))
        object.__setattr__(self, "q", as_expr(self.q))
        if self.p == ZERO and self.q == ZERO:
            raise SubstitutionError("phi must not vanish identically")

    @property
    def phi(self) -> Expr:
        return add(mul(self.p, S.u), self.q)

    @classmethod
    def from_phi(cls, phi: Expr, branch: str = "custom") -> Substitution:
        phi = as_expr(phi)
        p = partial(phi, S.u)
        if partial(p, S.u) != ZERO:
            raise SubstitutionError("phi must be linear in u")
        return cls(p, subs(phi, {S.u: ZERO}), branch)

    # taxonomy of the definition
    def is_self_adjoint(self) -> bool:
        return self.phi == S.u

    def is_quasi_self_adjoint(self) -> bool:
        phi = self.phi
        return (not any(s.name in ("t", "x") or s.kind == "function" for s in free_symbols(phi))
                and partial(phi, S.u) != ZERO)

    def is_weak_self_adjoint(self) -> bool:
        phi = self.phi
        return partial(phi, S.u) != ZERO and partial(phi, S.x) != ZERO

    def kind(self) -> str:
        if self.is_self_adjoint():
            return "self-adjoint"
        if self.is_quasi_self_adjoint():
            return "quasi self-adjoint"
        if self.is_weak_self_adjoint():
            return "weak self-adjoint"
        return "nonlinearly self-adjoint"

    def to_dict(self) -> dict:
        return {"branch": self.branch, "phi": self.phi.text, "p": self.p.text,
                "q": self.q.text, "kind": self.kind()}


def theorem3_substitution(eq: GardnerEquation, branch: str = "general",
                          aux: AuxFunctions | None = None, c1=S.c1, c2=S.c2,
                          c3=S.c3) -> Substitution:
    """The substitution v = p(t) u + q(t, x) making the equation self-adjoint.

    general:        p = c1 e^(2H),           q = c2 e^H
    n_half_A_zero:  p = (c1 - c2 L) e^(2H),  q = (c2 x + c3) e^H
    """
    eq.require_canonical("theorem3_substitution")
    aux = aux or build_aux(eq)
    e2H = power(aux.exp_H, 2)
    eH = aux.exp_H
    c1, c2, c3 = as_expr(c1), as_expr(c2), as_expr(c3)
    if branch == "general":
        return Substitution(mul(c1, e2H), mul(c2, eH), "general", ("c1", "c2"))
    if branch == "n_half_A_zero":
        half = is_number(eq.n) and number_value(eq.n) == Fraction(1, 2)
        if not half or eq.coefficient("A") != ZERO:
            raise SubstitutionError("branch n_half_A_zero requires n = 1/2 and A = 0; "
                                    f"got n = {eq.n.text}, A = {eq.coefficient('A').text}")
        p = mul(add(c1, mul(-1, c2, aux.L)), e2H)
        q = mul(add(mul(c2, S.x), c3), eH)
        return Substitution(p, q, "n_half_A_zero")
    raise SubstitutionError(f"unknown branch {branch!r}")


def substitute_v(e: Expr, phi: Expr) -> Expr:
    """Replace every v-jet v_(t^i x^j) by D_t^i D_x^j phi."""
    mapping = {}
    for s in jet_symbols(e, "v"):
        _, i, j = s.jet
        mapping[s] = Dt(Dx(phi, j), i)
    return subs(e, mapping) if mapping else e


def self_adjointness_residual(eq: GardnerEquation, sub: Substitution) -> Expr:
    """F*|_(v = phi) + phi_u Delta, which vanishes identically iff phi works.

    The u_t and u_xxx coefficients of F*|_(v = phi) = lambda Delta force
    lambda = -phi_u, so no separate solve for lambda is needed.
    """
    phi = sub.phi
    return add(substitute_v(adjoint_equation(eq), phi), mul(partial(phi, S.u), eq.residual()))
