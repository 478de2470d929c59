"""Classified Lie point symmetries of the canonical equation.

The generators are instantiated from their closed forms and certified two
independent ways: through the five determining equations and directly
through the invariance criterion pr(3)v(Delta) = 0 on solutions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import symbols as S
from .evaluate import evaluate
from .expr import (
    Expr, Mul, Num, ONE, Pow, Real, ZERO, add, as_expr, depends_on, free_symbols,
    is_number, log, mul, number_value, partial, power, sqrt, subs,
)
from .jets import JetPoint, characteristic, on_shell_reduce, prolong3, _check_generator
from .model import CoefficientFn, GardnerEquation, ModelError, build_aux

__all__ = [
    "Generator", "SymmetryCase", "CaseError", "generators_for", "determining_residuals",
    "invariance_residual", "invariant_surface", "classify", "Classification",
]


class CaseError(ModelError):
    pass


@dataclass(frozen=True)
class Generator:
    """v = tau(t) d_t + xi(t, x) d_x + eta(t, x, u) d_u."""

    tau: Expr
    xi: Expr
    eta: Expr
    label: str = ""

    def __post_init__(self):
        for name in ("tau", "xi", "eta"):
            object.__setattr__(self, name, as_expr(getattr(self, name)))
        _check_generator(self.tau, self.xi, self.eta)

    def __add__(self, other: Generator) -> Generator:
        return Generator(add(self.tau, other.tau), add(self.xi, other.xi),
                         add(self.eta, other.eta), f"{self.label} + {other.label}")

    def scale(self, k) -> Generator:
        k = as_expr(k)
        return Generator(mul(k, self.tau), mul(k, self.xi), mul(k, self.eta),
                         f"{k.text}*{self.label}")

    __rmul__ = scale

    def characteristic(self) -> Expr:
        return characteristic(self.tau, self.xi, self.eta)

    def to_dict(self) -> dict:
        return {"label": self.label, "tau": self.tau.text, "xi": self.xi.text,
                "eta": self.eta.text}


def combination(gens, coeffs) -> Generator:
    out = None
    for g, k in zip(gens, coeffs):
        term = g.scale(k)
        out = term if out is None else out + term
    return out


# ---------------------------------------------------------------------------
# cases


@dataclass(frozen=True)
class SymmetryCase:
    """A coefficient family with an enlarged symmetry algebra.

    ``params`` holds the constants (a, b, c, d) or, for case3, Q.
    """

    case_id: str
    params: Mapping[str, object] = field(default_factory=dict)
    t_domain: tuple[float, float] = (0.1, 2.0)

    def p(self, name: str) -> Expr:
        return as_expr(self.params[name])

    def line(self) -> Expr:
        return add(mul(self.p("b"), S.t), self.p("c"))

    def equation(self) -> GardnerEquation:
        """The canonical equation this case constrains."""
        cid = self.case_id
        if cid == "arbitrary":
            A = self.params.get("A", S.A)
            Q = self.params.get("Q", S.Q)
            return GardnerEquation.canonical(as_expr(A), as_expr(Q), self.params.get("n", S.n),
                                             self.t_domain)
        if cid == "case3":
            return GardnerEquation.canonical(ZERO, as_expr(self.params.get("Q", S.Q)),
                                             Fraction(1, 2), self.t_domain)
        self._require_b()
        line = self.line()
        if cid == "case1":
            n = as_expr(self.params["n"])
            if is_number(n) and number_value(n) == 1:
                raise CaseError("case1 requires n != 1")
            A = mul(self.p("a"), power(line, Num(Fraction(-1, 3))))
            # keep H = (d/b) log(bt + c): the printed laws use powers of bt + c
            Q = CoefficientFn(mul(self.p("d"), power(line, -1)),
                              mul(self.p("d"), power(self.p("b"), -1), log(line)))
            return GardnerEquation.canonical(A, Q, n, self.t_domain)
        if cid == "case2":
            A = mul(self.p("a"), power(line, mul(-1, self.p("d"))))
            Q = CoefficientFn(mul(self.p("b"), self.p("d"), power(line, -1)),
                              mul(self.p("d"), log(line)))
            return GardnerEquation.canonical(A, Q, 1, self.t_domain)
        raise CaseError(f"unknown case {cid!r}")

    def _require_b(self) -> None:
        b = self.p("b")
        if is_number(b) and number_value(b) == 0:
            raise CaseError("b = 0 is excluded: the generator would degenerate")
        if self.t_domain is not None and all(is_number(self.p(k)) for k in ("b", "c")):
            lo, hi = self.t_domain
            vals = [float(number_value(self.p("b"))) * t + float(number_value(self.p("c")))
                    for t in (lo, hi)]
            if min(vals) <= 0:
                raise CaseError(f"b*t + c must be positive on {list(self.t_domain)}")

    def guards(self) -> tuple[Expr, ...]:
        if self.case_id in ("case1", "case2"):
            return (self.line(),)
        return ()

    def to_dict(self) -> dict:
        return {"case": self.case_id,
                "params": {k: as_expr(v).text for k, v in self.params.items()},
                "t_domain": list(self.t_domain)}


def _is_half(d: Expr) -> bool:
    return is_number(d) and number_value(d) == Fraction(1, 2)


def case2_gamma(case: SymmetryCase) -> Expr:
    a, b, d = case.p("a"), case.p("b"), case.p("d")
    return mul(add(mul(3, d), -1), a, b, Num(Fraction(1, 6)), power(case.line(), mul(-1, d)))


def case2_beta(case: SymmetryCase) -> Expr:
    a, d = case.p("a"), case.p("d")
    if _is_half(d):
        return mul(power(a, 2), log(case.line()), Num(Fraction(1, 12)))
    return mul(add(mul(3, d), -1), power(a, 2),
               power(mul(6, add(1, mul(-2, d))), -1),
               power(case.line(), add(1, mul(-2, d))))


def case3_tau(Q: Expr, a=S.a) -> Expr:
    return mul(as_expr(a), power(sqrt(add(mul(2, power(Q, 2)), partial(Q, S.t))), -1))


def case3_beta(case: SymmetryCase) -> Expr:
    aux = build_aux(case.equation())
    return add(mul(case.p("b"), aux.L), case.p("c"))


def _check_case3_positive(case: SymmetryCase) -> None:
    Q = as_expr(case.params.get("Q", S.Q))
    disc = add(mul(2, power(Q, 2)), partial(Q, S.t))
    if any(s.kind in ("function", "constant") for s in free_symbols(disc)):
        return
    grid = np.linspace(*case.t_domain, 257)
    vals = np.broadcast_to(np.asarray(evaluate(disc, {"t": grid}), dtype=float), grid.shape)
    if not np.all(vals > 0):
        raise CaseError(f"case3 needs 2Q^2 + Q_t > 0 on {list(case.t_domain)}; "
                        f"min value {vals.min():.3g}")


V1 = Generator(ZERO, ONE, ZERO, "v1")


def generators_for(case: SymmetryCase) -> list[Generator]:
    """The catalog generators of ``case``."""
    cid = case.case_id
    if cid == "arbitrary":
        return [V1]
    case.equation()  # validates constraints
    if cid == "case1":
        b, n = case.p("b"), case.p("n")
        v2 = Generator(case.line(), mul(b, Num(Fraction(1, 3)), S.x),
                       mul(-1, b, power(mul(3, n), -1), S.u), "v2")
        return [V1, v2]
    if cid == "case2":
        b = case.p("b")
        third_b = mul(b, Num(Fraction(1, 3)))
        v2p = Generator(case.line(), add(mul(third_b, S.x), case2_beta(case)),
                        add(case2_gamma(case), mul(-1, third_b, S.u)), "v2'")
        return [V1, v2p]
    if cid == "case3":
        _check_case3_positive(case)
        Q = case.equation().Q.expr
        tau = case3_tau(Q, case.p("a"))
        tau_t = partial(tau, S.t)
        tau_tt = partial(tau_t, S.t)
        third = Num(Fraction(1, 3))
        v_tau = Generator(tau, mul(third, tau_t, S.x),
                          add(mul(third, tau_tt, S.x), mul(Num(Fraction(-2, 3)), tau_t, S.u)),
                          "v_tau")
        beta = case3_beta(case)
        v_beta = Generator(ZERO, beta, partial(beta, S.t), "v_beta")
        return [v_tau, v_beta]
    raise CaseError(f"unknown case {cid!r}")


# ---------------------------------------------------------------------------
# certificates


def determining_residuals(gen: Generator, eq: GardnerEquation) -> list[Expr]:
    """The five determining equations evaluated on ``gen``."""
    eq.require_canonical("determining_residuals")
    tau, xi, eta = gen.tau, gen.xi, gen.eta
    t, x, u = S.t, S.x, S.u
    A, Q, n = eq.coefficient("A"), eq.coefficient("Q"), eq.n
    d = partial
    eta_u = d(eta, u)
    eta_x = d(eta, x)
    xi_x = d(xi, x)
    un = power(u, n)
    u2n = power(u, mul(2, n))
    row1 = d(eta_u, u)
    row2 = add(d(eta_u, x), mul(-1, d(xi_x, x)))
    row3 = add(d(tau, t), mul(-3, xi_x))
    row4 = add(mul(tau, u, d(Q, t)), mul(-1, eta_u, u, Q), mul(3, xi_x, u, Q), mul(eta, Q),
               mul(eta_x, un, A), mul(eta_x, u2n), d(d(eta_x, x), x), d(eta, t))
    row5 = add(mul(tau, power(u, add(n, 1)), d(A, t)), mul(2, xi_x, power(u, add(n, 1)), A),
               mul(n, eta, un, A), mul(2, xi_x, power(u, add(mul(2, n), 1))),
               mul(2, n, eta, u2n), mul(3, d(d(eta_u, x), x), u),
               mul(-1, d(d(xi_x, x), x), u), mul(-1, d(xi, t), u))
    return [row1, row2, row3, row4, row5]


def invariance_residual(gen: Generator, eq: GardnerEquation) -> Expr:
    """pr(3)v(Delta) with u_t and its x-derivatives eliminated."""
    eq.require_canonical("invariance_residual")
    return on_shell_reduce(prolong3(gen, eq.residual()), eq)


def invariant_surface(gen: Generator, point: JetPoint, bindings=None) -> float:
    """eta - tau u_t - xi u_x at ``point``."""
    env = point.env()
    env.update(bindings or {})
    return float(evaluate(gen.characteristic(), env))


# ---------------------------------------------------------------------------
# classification by expression structure


@dataclass
class Classification:
    case_id: str
    params: dict
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"case": self.case_id,
                "params": {k: as_expr(v).text for k, v in self.params.items()},
                "notes": list(self.notes)}


def _num(e: Expr):
    if is_number(e):
        return number_value(e)
    return None


def _power_of_line(e: Expr):
    """(k, b, c, p) with e = k (b t + c)^p and numeric k, b, c, p; else None."""
    coeff = ONE
    body = e
    if isinstance(e, Mul):
        coeff = Num(e.coeff) if not isinstance(e.coeff, float) else Real(e.coeff)
        body = e.factors[0] if len(e.factors) == 1 else None
        if body is None:
            return None
    base, p = (body.base, body.exponent) if isinstance(body, Pow) else (body, ONE)
    if not depends_on(base, "t"):
        return None
    b = partial(base, S.t)
    if depends_on(b, "t"):
        return None
    c = subs(base, {S.t: ZERO})
    vals = [_num(v) for v in (coeff, b, c, p)]
    if any(v is None for v in vals):
        return None
    return tuple(vals)


def _same_line(b1, c1, b2, c2) -> float | None:
    """lambda with (b2, c2) = lambda (b1, c1), or None."""
    lam = b2 / b1
    if abs(c2 - lam * c1) > 1e-12 * max(1.0, abs(c2)):
        return None
    return lam


def classify(eq: GardnerEquation) -> Classification:
    """Which symmetry case (if any) the canonical equation belongs to."""
    eq.require_canonical("classify")
    n = _num(eq.n)
    A, Q = eq.coefficient("A"), eq.coefficient("Q")
    if n is not None and n == Fraction(1, 2) and A == ZERO:
        return Classification("case3", {"Q": Q}, ["n = 1/2, A = 0, Q arbitrary"])
    fa, fq = _power_of_line(A), _power_of_line(Q)
    if n is not None and fa and fq:
        ka, b, c, pa = fa
        kq, bq, cq, pq = fq
        lam = _same_line(b, c, bq, cq)
        if lam is not None and pq == -1:
            d_val = kq / lam
            if n != 1 and pa == Fraction(-1, 3):
                return Classification("case1", {"n": n, "a": ka, "b": b, "c": c, "d": d_val})
            if n == 1:
                d2 = Fraction(d_val) / Fraction(b) if not isinstance(b, float) else d_val / b
                if pa == -d2:
                    return Classification("case2", {"a": ka, "b": b, "c": c, "d": d2})
    return Classification("arbitrary", {}, ["no enlarged symmetry case matched by structure"])
