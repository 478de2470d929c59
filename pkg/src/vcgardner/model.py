"""The variable-coefficient Gardner family and its auxiliary functions.

    u_t + A(t) u^n u_x + C(t) u^(2n) u_x + B(t) u_xxx + Q(t) u = 0

Coefficients are expressions in ``t``.  An equation produced by an
equivalence transformation may carry a ``time_map``: its coefficients are
then written in the *source* time s while its own time is t~ = time_map(s).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import symbols as S
from .evaluate import evaluate
from .expr import (
    Add, Exp, Expr, FUNCTION, JET, Log, Mul, Num, ONE, Pow, Real, ZERO,
    add, as_expr, depends_on, exp, free_symbols, integral, is_number, log, mul,
    number_value, partial, power, subs,
)

__all__ = [
    "CoefficientFn", "GardnerEquation", "AuxFunctions", "ModelError", "TimeMap",
    "antiderivative", "build_aux", "residual", "canonical", "coefficient_values", "spec_for",
]


class ModelError(ValueError):
    pass


# ---------------------------------------------------------------------------
# antiderivative table


def _t_free(e: Expr) -> bool:
    return not depends_on(e, "t")


def _linear_in_t(e: Expr):
    """(b, c) with e = b*t + c, or None."""
    b = partial(e, S.t)
    if b == ZERO or not _t_free(b):
        return None
    return b, subs(e, {S.t: ZERO})


def _split_t(e: Expr) -> tuple[Expr, list[Expr]]:
    """Separate a product into its t-free part and t-dependent factors."""
    factors = e.factors if isinstance(e, Mul) else (e,)
    coeff = Num(e.coeff) if isinstance(e, Mul) and not isinstance(e.coeff, float) else (
        Real(e.coeff) if isinstance(e, Mul) else ONE)
    const, dep = [coeff], []
    for f in factors:
        (const if _t_free(f) else dep).append(f)
    return mul(*const), dep


def _term_antiderivative(f: Expr) -> Expr | None:
    if _t_free(f):
        return mul(f, S.t)
    k, dep = _split_t(f)
    if len(dep) != 1:
        return None
    g = dep[0]
    if isinstance(g, Exp):
        lin = _linear_in_t(g.arg)
        if lin is None:
            return None
        return mul(k, g, power(lin[0], -1))
    base, p = (g.base, g.exponent) if isinstance(g, Pow) else (g, ONE)
    if not _t_free(p):
        return None
    lin = _linear_in_t(base)
    if lin is None:
        return None
    b = lin[0]
    if is_number(p) and number_value(p) == -1:
        return mul(k, power(b, -1), log(base))
    p1 = add(p, 1)
    return mul(k, power(base, p1), power(mul(b, p1), -1))


def antiderivative(f: Expr) -> Expr | None:
    """Closed-form t-antiderivative from the fixed table, or None.

    Handles constants, k*(b t + c)^p (p = -1 gives a logarithm) and
    k*exp(p t + q), and sums of such terms.  The integration constant is
    chosen so that e.g. d/(b t + c) integrates to (d/b) log(b t + c).
    """
    f = as_expr(f)
    terms = f.terms if isinstance(f, Add) else (f,)
    out = []
    for term in terms:
        got = _term_antiderivative(term)
        if got is None:
            return None
        out.append(got)
    return add(*out)


# ---------------------------------------------------------------------------
# coefficient functions


@dataclass(frozen=True)
class CoefficientFn:
    """A coefficient function of t, optionally with a known antiderivative."""

    expr: Expr
    antiderivative: Expr | None = None

    def __post_init__(self):
        object.__setattr__(self, "expr", as_expr(self.expr))
        bad = [s.name for s in free_symbols(self.expr)
               if s.kind == JET or s.name == "x"
               or (s.kind == FUNCTION and "x" in s.deps)]
        if bad:
            raise ModelError(f"coefficient {self.expr.text} may depend on t only; "
                             f"found {', '.join(sorted(bad))}")

    @classmethod
    def of(cls, value) -> CoefficientFn:
        return value if isinstance(value, CoefficientFn) else cls(as_expr(value))

    def integral(self, t0: float = 0.0, t1: float = 2.0) -> tuple[Expr, str]:
        """Antiderivative and its provenance (user, closed-form or numeric)."""
        if self.antiderivative is not None:
            return self.antiderivative, "user"
        got = antiderivative(self.expr)
        if got is not None:
            return got, "closed-form"
        return integral(self.expr, S.t, t0, t1), "numeric-interpolant"


# ---------------------------------------------------------------------------
# time maps


class TimeMap:
    """Monotone map t~ = f(s) on [s0, s1] with numeric inversion.

    A 2049-point table brackets each target and bisection refines to
    1e-12 in s.
    """

    def __init__(self, forward: Expr, s_domain: tuple[float, float], points: int = 2049):
        self.forward = forward
        self.s_domain = tuple(float(v) for v in s_domain)
        grid = np.linspace(*self.s_domain, points)
        vals = np.broadcast_to(np.asarray(evaluate(forward, {"t": grid}), dtype=float),
                               grid.shape)
        diffs = np.diff(vals)
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ModelError(f"time map {forward.text} is not strictly monotone on "
                             f"{self.s_domain}; it cannot be inverted")
        self.increasing = bool(diffs[0] > 0)
        self._grid = grid
        self._vals = vals if self.increasing else vals[::-1]
        self._grid_sorted = grid if self.increasing else grid[::-1]

    @property
    def image(self) -> tuple[float, float]:
        return float(self._vals[0]), float(self._vals[-1])

    def __call__(self, s):
        return evaluate(self.forward, {"t": np.asarray(s, dtype=float)})

    def invert(self, target, tol: float = 1e-12):
        y = np.atleast_1d(np.asarray(target, dtype=float))
        lo_img, hi_img = self.image
        slack = 1e-12 * max(1.0, abs(hi_img - lo_img))
        if np.any((y < lo_img - slack) | (y > hi_img + slack)):
            raise ModelError(f"t~ outside the image {self.image} of the time map")
        idx = np.clip(np.searchsorted(self._vals, y), 1, len(self._vals) - 1)
        a = self._grid_sorted[idx - 1].copy()
        b = self._grid_sorted[idx].copy()
        # a always holds the lower function value, b the upper
        for _ in range(200):
            if np.all(np.abs(b - a) <= tol):
                break
            mid = 0.5 * (a + b)
            fm = np.broadcast_to(np.asarray(self(mid), dtype=float), mid.shape)
            below = fm < y
            a = np.where(below, mid, a)
            b = np.where(below, b, mid)
        out = 0.5 * (a + b)
        return out if np.ndim(target) else float(out[0])


# ---------------------------------------------------------------------------
# the equation


def _nonzero_on(e: Expr, domain, what: str) -> None:
    if any(s.kind == FUNCTION or s.kind == "constant" for s in free_symbols(e)):
        return
    grid = np.linspace(domain[0], domain[1], 257)
    vals = np.broadcast_to(np.asarray(evaluate(e, {"t": grid}), dtype=float), grid.shape)
    if not np.all(np.isfinite(vals)) or np.any(vals == 0) or (vals.min() < 0 < vals.max()):
        raise ModelError(f"{what} = {e.text} must be nonzero on t in {list(domain)}")


@dataclass(frozen=True)
class GardnerEquation:
    A: CoefficientFn
    B: CoefficientFn
    C: CoefficientFn
    Q: CoefficientFn
    n: Expr
    t_domain: tuple[float, float] = (0.0, 2.0)
    time_map: Expr | None = None
    source_domain: tuple[float, float] | None = None
    flags: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        for name in "ABCQ":
            object.__setattr__(self, name, CoefficientFn.of(getattr(self, name)))
        n = as_expr(self.n)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "t_domain", tuple(float(v) for v in self.t_domain))
        if is_number(n) and number_value(n) <= 0:
            raise ModelError(f"n must be positive, got {n.text}")
        dom = self.source_domain or self.t_domain
        if self.t_domain[0] >= self.t_domain[1]:
            raise ModelError(f"empty t domain {list(self.t_domain)}")
        _nonzero_on(mul(self.B.expr, self.C.expr), dom, "B*C")
        flags = list(self.flags)
        if self.Q.expr == ZERO and "Q=0" not in flags:
            flags.append("Q=0")
        if self.A.expr == ZERO and "A=0" not in flags:
            flags.append("A=0")
        object.__setattr__(self, "flags", tuple(flags))

    # -- construction helpers
    @classmethod
    def canonical(cls, A=ZERO, Q=ZERO, n=1, t_domain=(0.0, 2.0), **kw) -> GardnerEquation:
        return cls(CoefficientFn.of(A), CoefficientFn(ONE), CoefficientFn(ONE),
                   CoefficientFn.of(Q), as_expr(n), t_domain, **kw)

    @classmethod
    def arbitrary(cls, n=None) -> GardnerEquation:
        """Canonical member with symbolic A(t), Q(t) (and n unless given)."""
        return cls.canonical(S.A, S.Q, S.n if n is None else n)

    def with_(self, **changes) -> GardnerEquation:
        return replace(self, **changes)

    @property
    def is_canonical(self) -> bool:
        return self.B.expr == ONE and self.C.expr == ONE

    @property
    def reparameterized(self) -> bool:
        return self.time_map is not None

    def require_canonical(self, what: str = "this operation") -> None:
        if not self.is_canonical:
            raise ModelError(f"{what} requires the canonical form B = C = 1; "
                             "reduce with equivalence.to_canonical first")
        if self.reparameterized:
            raise ModelError(f"{what} needs coefficients written in the equation's own "
                             "time; this equation carries a non-linear time map")

    # -- expressions
    def coefficient(self, name: str) -> Expr:
        return getattr(self, name).expr

    def nonlinearity(self) -> Expr:
        """A u^n + C u^(2n), the factor multiplying u_x."""
        n = self.n
        return add(mul(self.A.expr, power(S.u, n)), mul(self.C.expr, power(S.u, mul(2, n))))

    def evolution_rhs(self) -> Expr:
        """G in u_t = G."""
        return mul(-1, add(mul(self.nonlinearity(), S.u_x), mul(self.B.expr, S.u_xxx),
                           mul(self.Q.expr, S.u)))

    def residual(self) -> Expr:
        return add(S.u_t, mul(-1, self.evolution_rhs()))

    @property
    def fractional(self) -> bool:
        n = self.n
        return not (is_number(n) and Fraction(number_value(n)).denominator == 1)

    def sampling_guards(self) -> tuple[Expr, ...]:
        """Expressions that must stay positive where coefficients are sampled."""
        out = []
        for name in "ABCQ":
            e = self.coefficient(name)
            for node in _walk(e):
                if isinstance(node, Pow) and not (is_number(node.exponent)
                                                  and Fraction(number_value(node.exponent)).denominator == 1):
                    if not any(s.kind == JET for s in free_symbols(node.base)):
                        out.append(node.base)
                if isinstance(node, Log):
                    out.append(node.arg)
        closed = [g for g in out if all(s.name == "t" for s in free_symbols(g))]
        return tuple(dict.fromkeys(closed))

    def to_dict(self) -> dict:
        d = {name: self.coefficient(name).text for name in "ABCQ"}
        d["n"] = self.n.text
        d["t_domain"] = list(self.t_domain)
        if self.time_map is not None:
            d["time_map"] = self.time_map.text
            d["source_domain"] = list(self.source_domain)
        if self.flags:
            d["flags"] = list(self.flags)
        return d

    def time_map_table(self) -> TimeMap | None:
        if self.time_map is None:
            return None
        return _time_map_cached(self.time_map, self.source_domain)


_TM_CACHE: dict = {}


def _time_map_cached(forward: Expr, dom) -> TimeMap:
    key = (forward, tuple(dom))
    tm = _TM_CACHE.get(key)
    if tm is None:
        tm = TimeMap(forward, dom)
        _TM_CACHE[key] = tm
    return tm


def _walk(e: Expr):
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(node.children())


def spec_for(eq: GardnerEquation, spec=None, **changes):
    """A SamplingSpec suited to ``eq``.

    Sets the u-positivity guard when powers of u may be fractional, adds the
    coefficient guards and clips the t range into the equation's domain.
    """
    from .jets import SamplingSpec

    spec = spec or SamplingSpec()
    lo, hi = eq.source_domain or eq.t_domain
    t0, t1 = spec.t_range
    width = hi - lo
    t0, t1 = max(t0, lo + 1e-3 * width), min(t1, hi - 1e-3 * width)
    if t0 >= t1:
        t0, t1 = lo + 0.05 * width, hi - 0.05 * width
    out = spec.replace(t_range=(t0, t1),
                       positive_u=spec.positive_u or eq.fractional,
                       guards=tuple(dict.fromkeys(spec.guards + eq.sampling_guards())))
    return out.replace(**changes) if changes else out


def canonical(A=ZERO, Q=ZERO, n=1, **kw) -> GardnerEquation:
    return GardnerEquation.canonical(A, Q, n, **kw)


def residual(eq: GardnerEquation) -> Expr:
    """Delta = u_t + A u^n u_x + C u^(2n) u_x + B u_xxx + Q u."""
    return eq.residual()


def coefficient_values(eq: GardnerEquation, t_values, bindings=None) -> dict[str, np.ndarray]:
    """Numeric A, B, C, Q at the equation's own times.

    For a re-parameterized equation the times are first mapped back to the
    source time by inverting the time map.
    """
    t_values = np.asarray(t_values, dtype=float)
    s = t_values if eq.time_map is None else eq.time_map_table().invert(t_values)
    env = {"t": s, **(bindings or {})}
    return {name: np.broadcast_to(np.asarray(evaluate(eq.coefficient(name), env), dtype=float),
                                  np.shape(s)).copy() for name in "ABCQ"}


# ---------------------------------------------------------------------------
# H and L


@dataclass(frozen=True)
class AuxFunctions:
    """H = int Q dt and L = int exp(-H) dt."""

    H: Expr
    L: Expr
    provenance: str
    Q: Expr

    @property
    def exp_H(self) -> Expr:
        return exp(self.H)

    def numeric(self) -> bool:
        return self.provenance != "closed-form"


def build_aux(Q, t_domain: tuple[float, float] = (0.0, 2.0),
              antiderivatives: dict | None = None) -> AuxFunctions:
    """Closed-form H and L when the table applies, else quadrature interpolants.

    ``Q`` may be an expression, a CoefficientFn or an equation.  A symbolic
    Q(t) yields the symbols H and L whose derivative rules are H_t = Q and
    L_t = exp(-H).  ``antiderivatives`` may supply closed forms for "H"
    and "L".
    """
    if isinstance(Q, GardnerEquation):
        eq = Q
        if eq.reparameterized:
            raise ModelError("H and L need coefficients in the equation's own time")
        Q, t_domain = eq.Q, eq.t_domain
    qfn = CoefficientFn.of(Q)
    q = qfn.expr
    antiderivatives = dict(antiderivatives or {})
    if q == S.Q:
        return AuxFunctions(S.H, S.L, "symbolic", q)
    t0, t1 = t_domain
    if "H" in antiderivatives:
        H, h_prov = as_expr(antiderivatives["H"]), "user"
    else:
        H, h_prov = qfn.integral(t0, t1)
    if q == ZERO:
        H = ZERO
    if "L" in antiderivatives:
        L, l_prov = as_expr(antiderivatives["L"]), "user"
    else:
        e_minus_H = exp(mul(-1, H))
        if is_number(q) and q != ZERO:
            # L = (1 - exp(-q t))/q rather than -exp(-q t)/q
            L, l_prov = mul(add(1, mul(-1, e_minus_H)), power(q, -1)), "closed-form"
        else:
            got = antiderivative(e_minus_H) if h_prov != "numeric-interpolant" else None
            if got is not None:
                L, l_prov = got, "closed-form"
            else:
                L, l_prov = integral(e_minus_H, S.t, t0, t1), "numeric-interpolant"
    prov = "numeric-interpolant" if "numeric-interpolant" in (h_prov, l_prov) else "closed-form"
    return AuxFunctions(H, L, prov, q)


def substitute_aux(e: Expr, aux: AuxFunctions) -> Expr:
    """Replace the symbols H, L (and Q) by the concrete auxiliary functions."""
    mapping = {S.H: aux.H, S.L: aux.L}
    if aux.Q != S.Q:
        from .jets import bind_functions

        e = bind_functions(e, {"Q": aux.Q})
    return subs(e, mapping)


def warn_flags(eq: GardnerEquation) -> None:
    for flag in eq.flags:
        warnings.warn(f"equation admitted with {flag}", stacklevel=2)
