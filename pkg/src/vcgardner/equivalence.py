"""Equivalence group of the Gardner family and reduction to B = C = 1.

Group element (eps1, eps2, eps_r, alpha, r):

    t~ = alpha(t),  x~ = (x + eps2) e^eps1,  u~ = e^(eps1 - eps_r r(t)) u

with

    A~ = e^(n eps_r r + (1-n) eps1) A / alpha_t,   B~ = e^(3 eps1) B / alpha_t,
    C~ = e^(2n eps_r r + (1-2n) eps1) C / alpha_t, Q~ = (Q + eps_r r_t) / alpha_t.

Transformed coefficients are kept as expressions in the *source* time
together with the time map; when that map is affine it is inverted exactly
so the result is an ordinary equation in its own time.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass

import numpy as np

from . import symbols as S
from .evaluate import evaluate
from .expr import (
    Expr, Num, ONE, ZERO, add, as_expr, depends_on, exp, log, mul, partial, power, subs,
)
from .jets import JetPoint
from .model import CoefficientFn, GardnerEquation, ModelError, TimeMap

__all__ = [
    "EquivalenceParams", "TransformedEquation", "EquivalenceError", "apply_group",
    "inverse", "to_canonical", "pushforward_jet", "pushforward_verdict", "identity_params",
    "apply_group_full", "canonical_params", "paper_A_tilde",
]


class EquivalenceError(ModelError):
    pass


@dataclass(frozen=True)
class EquivalenceParams:
    """Parameters of one element of the equivalence group.

    ``alpha`` and ``r`` are functions of the equation's own time unless
    ``base_frame`` is set, in which case they are written in the source time
    of a re-parameterized equation (as produced by :func:`inverse`).
    """

    eps1: float = 0.0
    eps2: float = 0.0
    eps_r: float = 0.0
    alpha: Expr = S.t
    r: Expr = ZERO
    base_frame: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_expr(self.alpha))
        object.__setattr__(self, "r", as_expr(self.r))
        for name in ("alpha", "r"):
            e = getattr(self, name)
            if depends_on(e, "x") or any(s.kind == "jet" for s in _syms(e)):
                raise EquivalenceError(f"{name} must be a function of t only")


def _syms(e: Expr):
    from .expr import free_symbols

    return free_symbols(e)


def identity_params() -> EquivalenceParams:
    return EquivalenceParams()


@dataclass(frozen=True)
class TransformedEquation:
    """Result of a point transformation of the class.

    ``t_tilde`` and ``theta`` are expressions in the source time s (written
    with the symbol t); x~ = (x + eps2) e^eps1 and u~ = theta(s) u.
    """

    eq_tilde: GardnerEquation
    source: GardnerEquation
    t_tilde: Expr
    eps1: float
    eps2: float
    theta: Expr

    def x_tilde(self, x):
        return (np.asarray(x, dtype=float) + self.eps2) * math.exp(self.eps1)

    def maps_text(self) -> dict:
        return {"t_tilde": self.t_tilde.text,
                "x_tilde": f"(x + {self.eps2!r})*exp({self.eps1!r})",
                "theta": self.theta.text}

    def compose(self, other: TransformedEquation) -> TransformedEquation:
        """Apply ``other`` after ``self`` (other.source must be self.eq_tilde)."""
        t_src = self._to_self_source(other.t_tilde)
        theta = mul(self.theta, self._to_self_source(other.theta))
        eps1 = self.eps1 + other.eps1
        eps2 = self.eps2 + other.eps2 * math.exp(-self.eps1)
        return TransformedEquation(other.eq_tilde, self.source, t_src, eps1, eps2, theta)

    def _to_self_source(self, e: Expr) -> Expr:
        """Rewrite an expression in eq_tilde's source time in this source time."""
        mid = self.eq_tilde
        if mid.time_map is None:
            return subs(e, {S.t: self.t_tilde})
        return e


# ---------------------------------------------------------------------------
# the group action


def _base_time(eq: GardnerEquation) -> Expr:
    return S.t if eq.time_map is None else eq.time_map


def _in_base(e: Expr, eq: GardnerEquation) -> Expr:
    return e if eq.time_map is None else subs(e, {S.t: eq.time_map})


def _d_own(e_base: Expr, eq: GardnerEquation) -> Expr:
    """d/dt_own of an expression written in the base time."""
    if eq.time_map is None:
        return partial(e_base, S.t)
    return mul(partial(e_base, S.t), power(partial(eq.time_map, S.t), -1))


def _affine_inverse(time_map: Expr):
    """(k, m) with time_map = k*t + m when it is affine with constant slope."""
    k = partial(time_map, S.t)
    if k == ZERO or depends_on(k, "t"):
        return None
    return k, subs(time_map, {S.t: ZERO})


def _settle(A, B, C, Q, n, time_map: Expr, source_domain, flags=()) -> GardnerEquation:
    """Build the transformed equation, inverting an affine time map exactly."""
    t0, t1 = source_domain
    if time_map == S.t:
        return GardnerEquation(A, B, C, Q, n, (t0, t1), flags=flags)
    aff = _affine_inverse(time_map)
    tm = TimeMap(time_map, source_domain)
    image = tm.image
    if aff is not None:
        k, m = aff
        back = {S.t: mul(add(S.t, mul(-1, m)), power(k, -1))}
        coeffs = [CoefficientFn(subs(c, back)) for c in (A, B, C, Q)]
        return GardnerEquation(*coeffs, n, image, flags=flags)
    return GardnerEquation(A, B, C, Q, n, image, time_map=time_map,
                           source_domain=(t0, t1), flags=flags)


def apply_group(eq: GardnerEquation, p: EquivalenceParams) -> GardnerEquation:
    """Transformed coefficients (A~, B~, C~, Q~, n~ = n) per the group formulas."""
    return apply_group_full(eq, p).eq_tilde


def apply_group_full(eq: GardnerEquation, p: EquivalenceParams) -> TransformedEquation:
    n = eq.n
    alpha = p.alpha if p.base_frame else _in_base(p.alpha, eq)
    r = p.r if p.base_frame else _in_base(p.r, eq)
    alpha_t = _d_own(alpha, eq)
    r_t = _d_own(r, eq)
    src = eq.source_domain or eq.t_domain
    _check_alpha(alpha_t, src)
    inv_at = power(alpha_t, -1)
    A = mul(exp(add(mul(n, p.eps_r, r), mul(add(1, mul(-1, n)), p.eps1))), eq.A.expr, inv_at)
    B = mul(exp(mul(3, p.eps1)), eq.B.expr, inv_at)
    C = mul(exp(add(mul(2, n, p.eps_r, r), mul(add(1, mul(-2, n)), p.eps1))), eq.C.expr, inv_at)
    Q = mul(add(eq.Q.expr, mul(p.eps_r, r_t)), inv_at)
    eq_t = _settle(A, B, C, Q, n, alpha, src)
    theta = exp(add(p.eps1, mul(-1, p.eps_r, r)))
    return TransformedEquation(eq_t, eq, alpha, p.eps1, p.eps2, theta)


def _check_alpha(alpha_t: Expr, domain) -> None:
    if any(s.kind in ("function", "constant") for s in _syms(alpha_t)):
        return
    grid = np.linspace(domain[0], domain[1], 257)
    vals = np.broadcast_to(np.asarray(evaluate(alpha_t, {"t": grid}), dtype=float), grid.shape)
    if not np.all(np.isfinite(vals)) or np.any(vals == 0) or vals.min() < 0 < vals.max():
        raise EquivalenceError(f"alpha_t = {alpha_t.text} vanishes or changes sign on "
                               f"{list(domain)}; alpha is not invertible there")


def inverse(p: EquivalenceParams, eq: GardnerEquation) -> EquivalenceParams:
    """Parameters undoing ``p``, to be applied to ``apply_group(eq, p)``.

    eps1' = -eps1, eps2' = -eps2 e^eps1, eps_r' = eps_r and r' = -r.  When
    the transformed equation keeps a time map, alpha' and r' are written in
    its source (base) frame and alpha' sends time back to eq's own time;
    when an affine map was inverted exactly they are written in the new
    time instead.
    """
    out = apply_group(eq, p)
    e1, e2 = -p.eps1, -p.eps2 * math.exp(p.eps1)
    r = p.r if p.base_frame else _in_base(p.r, eq)
    if out.time_map is not None:
        return EquivalenceParams(e1, e2, p.eps_r, _base_time(eq), mul(-1, r), base_frame=True)
    if eq.time_map is not None:
        raise EquivalenceError("cannot invert: source and result are in different frames")
    alpha = p.alpha
    if alpha == S.t:
        back = {}
    else:
        aff = _affine_inverse(alpha)
        if aff is None:  # pragma: no cover - _settle only drops affine maps
            raise EquivalenceError("non-affine time map was not retained")
        k, m = aff
        back = {S.t: mul(add(S.t, mul(-1, m)), power(k, -1))}
    return EquivalenceParams(e1, e2, p.eps_r, subs(S.t, back) if back else S.t,
                             mul(-1, subs(r, back)) if back else mul(-1, r))


# ---------------------------------------------------------------------------
# reduction to the canonical subclass


def to_canonical(eq: GardnerEquation, eps1: float = 0.0, eps2: float = 0.0) -> TransformedEquation:
    """Reduce to B~ = C~ = 1.

    t~ = e^(3 eps1) int B dt, x~ = (x + eps2) e^eps1,
    u~ = e^(-eps1/n) (B/C)^(-1/(2n)) u,
    A~ = e^(-2 eps1) A / (B theta^n)   (= e^(-eps1) A / sqrt(B C) when B > 0),
    Q~ = e^(-3 eps1) (Q/B + C (B/C)_t / (2 n B^2)).
    """
    if eq.reparameterized:
        raise EquivalenceError("to_canonical expects coefficients in the equation's own time")
    n = eq.n
    A, B, C, Q = (eq.coefficient(k) for k in "ABCQ")
    ratio = mul(B, power(C, -1))
    _check_positive(ratio, eq.t_domain)
    intB, _ = eq.B.integral(*eq.t_domain)
    t_tilde = mul(exp(mul(3, eps1)), intB)
    theta = mul(exp(mul(-eps1, power(n, -1))), power(ratio, mul(-1, power(mul(2, n), -1))))
    A_t = mul(exp(mul(-2, eps1)), A, power(mul(B, power(theta, n)), -1))
    Q_t = mul(exp(mul(-3, eps1)),
              add(mul(Q, power(B, -1)),
                  mul(C, power(mul(2, n, power(B, 2)), -1), partial(ratio, S.t))))
    try:
        eq_t = _settle(A_t, ONE, ONE, Q_t, n, t_tilde, eq.t_domain)
    except ModelError as err:
        raise EquivalenceError(f"int B dt is not invertible: {err}") from err
    return TransformedEquation(eq_t, eq, t_tilde, eps1, eps2, theta)


def canonical_params(eq: GardnerEquation, eps1: float = 0.0,
                     eps2: float = 0.0) -> EquivalenceParams:
    """The reduction to B = C = 1 written as one group element.

    alpha = e^(3 eps1) int B dt, eps_r = 1 and
    r = eps1 (1 + 1/n) + log(B/C)/(2n), so that e^(eps1 - r) is the
    u-scaling e^(-eps1/n) (B/C)^(-1/(2n)) of :func:`to_canonical`.
    """
    if eq.reparameterized:
        raise EquivalenceError("canonical_params expects coefficients in the equation's own time")
    n = eq.n
    B, C = eq.coefficient("B"), eq.coefficient("C")
    ratio = mul(B, power(C, -1))
    _check_positive(ratio, eq.t_domain)
    intB, _ = eq.B.integral(*eq.t_domain)
    r = add(mul(eps1, add(1, power(n, -1))), mul(log(ratio), power(mul(2, n), -1)))
    return EquivalenceParams(eps1, eps2, 1, mul(exp(mul(3, eps1)), intB), r)


def _check_positive(e: Expr, domain) -> None:
    if any(s.kind in ("function", "constant") for s in _syms(e)):
        return
    grid = np.linspace(domain[0], domain[1], 257)
    vals = np.broadcast_to(np.asarray(evaluate(e, {"t": grid}), dtype=float), grid.shape)
    if not np.all(vals > 0):
        raise EquivalenceError(f"B/C = {e.text} must be positive on {list(domain)}")


def paper_A_tilde(eq: GardnerEquation, eps1: float = 0.0) -> Expr:
    """A~ exactly as printed, e^(-eps1) A / sqrt(B C) (valid for B, C > 0)."""
    A, B, C = (eq.coefficient(k) for k in "ABC")
    return mul(exp(mul(-1, eps1)), A, power(mul(B, C), Num(Fraction(-1, 2))))


# ---------------------------------------------------------------------------
# jets


def pushforward_jet(point: JetPoint, tr: TransformedEquation, bindings=None) -> JetPoint:
    """Map a jet of the source equation to the transformed variables.

    t~ depends on t only, x~ on x only and u~ = theta(t) u, so
    u~_(x~^j) = theta e^(-j eps1) u_(x^j) and
    u~_(t~ x~^j) = (theta_t u_(x^j) + theta u_(t x^j)) e^(-j eps1) / t~_t.
    The returned point also records the source time under ``extra["s"]``.
    """
    env = {"t": point.t, **(bindings or {})}
    th = float(evaluate(tr.theta, env))
    th_t = float(evaluate(partial(tr.theta, S.t), env))
    tt = float(evaluate(tr.t_tilde, env))
    tt_t = float(evaluate(partial(tr.t_tilde, S.t), env))
    x_new = float(tr.x_tilde(point.x))
    u_new: dict[tuple[int, int], float] = {}
    for (i, j), val in point.u_derivs.items():
        scale = math.exp(-j * tr.eps1)
        if i == 0:
            u_new[(0, j)] = th * scale * val
        elif i == 1 and (0, j) in point.u_derivs:
            u_new[(1, j)] = (th_t * point.u_derivs[(0, j)] + th * val) * scale / tt_t
    return JetPoint(tt, x_new, u_new, {}, {"s": point.t})


def pushforward_verdict(tr: TransformedEquation, spec=None, tol: float = 1e-9,
                        bindings=None):
    """Push on-shell jets of the source through ``tr`` and test the target equation.

    Points are sampled for the source equation with u_t set from the source
    evolution equation; each pushed point is checked against the residual of
    tr.eq_tilde (coefficients at t~, via the time map when present), relative
    to the sum of the absolute values of its terms.
    """
    from .jets import IdentityVerdict, sample_jets
    from .model import coefficient_values, spec_for

    src = tr.source
    spec = spec_for(src, spec)
    rhs = src.evolution_rhs()
    worst_abs, worst_rel, worst_pt = 0.0, 0.0, None
    n = float(evaluate(src.n, dict(bindings or {})))
    points = sample_jets(spec)
    for pt in points:
        pt.u_derivs[(1, 0)] = float(evaluate(rhs, {**pt.env(), **(bindings or {})}))
    pushed = [pushforward_jet(pt, tr, bindings) for pt in points]
    tt = np.array([p.t for p in pushed])
    coeff = coefficient_values(tr.eq_tilde, tt, bindings)
    for k, p in enumerate(pushed):
        u = p.u_derivs[(0, 0)]
        ux, uxxx, ut = p.u_derivs[(0, 1)], p.u_derivs[(0, 3)], p.u_derivs[(1, 0)]
        terms = [ut, coeff["A"][k] * u ** n * ux, coeff["C"][k] * u ** (2 * n) * ux,
                 coeff["B"][k] * uxxx, coeff["Q"][k] * u]
        r = abs(sum(terms))
        rel = r / (1.0 + sum(abs(v) for v in terms))
        if rel >= worst_rel:
            worst_abs, worst_rel, worst_pt = r, rel, p
    return IdentityVerdict(worst_rel <= tol, worst_abs, worst_rel, len(points), worst_pt, tol)
