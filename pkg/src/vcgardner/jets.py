"""Jet-space calculus and probabilistic identity testing.

Identities are certified by evaluating at seeded random jet points rather
than by symbolic simplification: every identity handled here is a
differential polynomial in the jets with smooth coefficients, so vanishing
at many random points is a sound (probabilistic) zero test.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import symbols as S
from .evaluate import evaluate_with_magnitude
from .expr import (
    CONSTANT, FUNCTION, INDEPENDENT, JET, MAX_T_ORDER, MAX_X_ORDER,
    Expr, ONE, Symbol, ZERO, add, as_expr, derive, free_symbols, jet_symbols, mul, partial,
    subs,
)

__all__ = [
    "total_derivative", "Dx", "Dt", "prolong3", "euler_operator", "higher_euler",
    "on_shell_reduce", "OnShell", "SamplingSpec", "SamplingError", "JetPoint", "JetBatch",
    "sample_jets", "sample_batch", "IdentityVerdict", "check_identity", "bind_functions",
    "GeneratorError",
]


# ---------------------------------------------------------------------------
# total derivatives


def _function_derivative(s: Symbol, var: str) -> Expr:
    return partial(s, S.t if var == "t" else S.x)


def total_derivative(e: Expr, direction: str) -> Expr:
    """D_t or D_x acting on a jet expression."""
    if direction not in ("t", "x"):
        raise ValueError(f"direction must be 't' or 'x', got {direction!r}")
    di, dj = (1, 0) if direction == "t" else (0, 1)

    def leaf(s: Symbol) -> Expr:
        if s.kind == JET:
            var, i, j = s.jet
            return S.jet(var, i + di, j + dj)
        if s.kind == INDEPENDENT:
            return ONE if s.name == direction else ZERO
        if s.kind == FUNCTION:
            return _function_derivative(s, direction)
        return ZERO

    return derive(e, leaf, direction)


def Dx(e: Expr, times: int = 1) -> Expr:
    for _ in range(times):
        e = total_derivative(e, "x")
    return e


def Dt(e: Expr, times: int = 1) -> Expr:
    for _ in range(times):
        e = total_derivative(e, "t")
    return e


# ---------------------------------------------------------------------------
# prolongation


class GeneratorError(ValueError):
    pass


def _check_generator(tau: Expr, xi: Expr, eta: Expr) -> None:
    def bad(e: Expr, allowed: set[str]) -> list[str]:
        out = []
        for s in free_symbols(e):
            if s.kind == JET and not (s.jet == ("u", 0, 0) and "u" in allowed):
                out.append(s.name)
            elif s.kind == INDEPENDENT and s.name not in allowed:
                out.append(s.name)
            elif s.kind == FUNCTION and not set(s.deps) <= allowed:
                out.append(s.name)
        return sorted(out)

    for label, e, allowed in (("tau", tau, {"t"}), ("xi", xi, {"t", "x"}),
                              ("eta", eta, {"t", "x", "u"})):
        wrong = bad(e, allowed)
        if wrong:
            raise GeneratorError(f"{label} may only depend on {sorted(allowed)}; "
                                 f"found {', '.join(wrong)}")


def characteristic(tau: Expr, xi: Expr, eta: Expr) -> Expr:
    """W = eta - tau*u_t - xi*u_x."""
    return add(eta, mul(-1, tau, S.u_t), mul(-1, xi, S.u_x))


def prolong3(gen, target: Expr) -> Expr:
    """Apply the prolonged vector field of ``gen`` to ``target``.

    ``gen`` is anything with ``tau``, ``xi`` and ``eta`` attributes (or a
    3-tuple).  Every u-jet present in ``target`` receives its coefficient
    zeta^J = D_J(W) + tau*u_{J t} + xi*u_{J x}.
    """
    tau, xi, eta = (gen.tau, gen.xi, gen.eta) if hasattr(gen, "tau") else gen
    tau, xi, eta = as_expr(tau), as_expr(xi), as_expr(eta)
    _check_generator(tau, xi, eta)
    W = characteristic(tau, xi, eta)
    parts = [mul(tau, partial(target, S.t)), mul(xi, partial(target, S.x)),
             mul(eta, partial(target, S.u))]
    dW_cache: dict[tuple[int, int], Expr] = {(0, 0): W}

    def DW(i: int, j: int) -> Expr:
        if (i, j) not in dW_cache:
            if j > 0:
                dW_cache[(i, j)] = Dx(DW(i, j - 1))
            else:
                dW_cache[(i, j)] = Dt(DW(i - 1, j))
        return dW_cache[(i, j)]

    for s in jet_symbols(target, "u"):
        _, i, j = s.jet
        if i == j == 0:
            continue
        d = partial(target, s)
        if d == ZERO:
            continue
        zeta = add(DW(i, j), mul(tau, S.jet("u", i + 1, j)), mul(xi, S.jet("u", i, j + 1)))
        parts.append(mul(zeta, d))
    return add(*parts)


# ---------------------------------------------------------------------------
# Euler operators


def euler_operator(e: Expr, wrt: str = "u", spatial_only: bool = False) -> Expr:
    """Variational derivative sum_J (-D)_J d e / d w_J.

    With ``spatial_only`` only pure-x jets are differentiated, giving the
    spatial Euler operator E_u used for densities.
    """
    parts = []
    for s in jet_symbols(e, wrt):
        _, i, j = s.jet
        if spatial_only and i > 0:
            continue
        term = partial(e, s)
        if term == ZERO:
            continue
        term = Dt(Dx(term, j), i)
        parts.append(term if (i + j) % 2 == 0 else mul(-1, term))
    return add(*parts)


def higher_euler(e: Expr, order: int, wrt: str = "u") -> Expr:
    """Spatial higher Euler operator E^(order)_w.

    E^(i) = sum_{k >= i} C(k, i) (-D_x)^(k-i) d/d w_{k x}; E^(0) is E_w.
    """
    from math import comb

    parts = []
    for s in jet_symbols(e, wrt):
        _, i, k = s.jet
        if i > 0 or k < order:
            continue
        term = partial(e, s)
        if term == ZERO:
            continue
        term = mul(comb(k, order), Dx(term, k - order))
        parts.append(term if (k - order) % 2 == 0 else mul(-1, term))
    return add(*parts)


# ---------------------------------------------------------------------------
# on-shell reduction


class OnShell:
    """Substitution table eliminating u_t and its derivatives.

    ``rhs`` is G in u_t = G (free of t-derivatives of u).  Higher t-orders
    are obtained by differentiating and reducing again.
    """

    def __init__(self, rhs: Expr):
        if any(s.jet[1] > 0 for s in jet_symbols(rhs, "u")):
            raise ValueError("evolution right-hand side must be free of t-derivatives")
        self.rhs = rhs
        self._pure_t: dict[int, Expr] = {0: S.u, 1: rhs}
        self._table: dict[tuple[int, int], Expr] = {}

    def pure_t(self, i: int) -> Expr:
        if i not in self._pure_t:
            self._pure_t[i] = self.reduce(Dt(self.pure_t(i - 1)))
        return self._pure_t[i]

    def value(self, i: int, j: int) -> Expr:
        key = (i, j)
        if key not in self._table:
            self._table[key] = self.pure_t(i) if j == 0 else Dx(self.value(i, j - 1))
        return self._table[key]

    def reduce(self, e: Expr) -> Expr:
        targets = [s for s in jet_symbols(e, "u") if s.jet[1] > 0]
        if not targets:
            return e
        return subs(e, {s: self.value(s.jet[1], s.jet[2]) for s in targets})


_ONSHELL_CACHE: dict[Expr, OnShell] = {}


def _onshell_for(eq) -> OnShell:
    rhs = eq.evolution_rhs() if hasattr(eq, "evolution_rhs") else eq
    table = _ONSHELL_CACHE.get(rhs)
    if table is None:
        table = OnShell(rhs)
        _ONSHELL_CACHE[rhs] = table
    return table


def on_shell_reduce(e: Expr, eq) -> Expr:
    """Replace u_t and its x-derivatives using the equation ``eq``.

    ``eq`` is a GardnerEquation (anything with ``evolution_rhs()``) or the
    right-hand side G of u_t = G directly.
    """
    return _onshell_for(eq).reduce(e)


# ---------------------------------------------------------------------------
# sampling


class SamplingError(ValueError):
    pass


@dataclass(frozen=True)
class SamplingSpec:
    """Ranges for random jet points.

    ``positive_u`` must be set whenever fractional powers of u are in play;
    ``guards`` are expressions in t (and constants bound via ``bindings`` at
    check time) that must stay positive, e.g. ``b*t + c`` for Case 1.
    """

    count: int = 100
    seed: int = 0
    t_range: tuple[float, float] = (0.1, 2.0)
    x_range: tuple[float, float] = (-1.0, 1.0)
    u_range: tuple[float, float] = (0.5, 2.0)
    deriv_range: tuple[float, float] = (-1.0, 1.0)
    v_range: tuple[float, float] = (-1.0, 1.0)
    function_range: tuple[float, float] = (-1.0, 1.0)
    constant_range: tuple[float, float] = (0.5, 1.5)
    positive_u: bool = False
    tolerance: float = 1e-9
    guards: tuple[Expr, ...] = ()

    def replace(self, **changes) -> SamplingSpec:
        from dataclasses import replace

        return replace(self, **changes)

    @classmethod
    def from_dict(cls, data: Mapping) -> SamplingSpec:
        kw = dict(data)
        for key in ("t_range", "x_range", "u_range", "deriv_range", "v_range",
                    "function_range", "constant_range"):
            if key in kw:
                kw[key] = tuple(float(v) for v in kw[key])
        return cls(**kw)

    def to_dict(self) -> dict:
        return {
            "count": self.count, "seed": self.seed, "t_range": list(self.t_range),
            "x_range": list(self.x_range), "u_range": list(self.u_range),
            "deriv_range": list(self.deriv_range), "v_range": list(self.v_range),
            "function_range": list(self.function_range),
            "constant_range": list(self.constant_range), "positive_u": self.positive_u,
            "tolerance": self.tolerance,
        }


@dataclass
class JetPoint:
    t: float
    x: float
    u_derivs: dict[tuple[int, int], float]
    v_derivs: dict[tuple[int, int], float] = field(default_factory=dict)
    extra: dict[str, float] = field(default_factory=dict)

    def env(self) -> dict[str, float]:
        out = {"t": self.t, "x": self.x}
        for var, table in (("u", self.u_derivs), ("v", self.v_derivs)):
            for (i, j), val in table.items():
                out[S.jet(var, i, j).name] = val
        out.update(self.extra)
        return out

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in sorted(self.env().items())}


@dataclass
class JetBatch:
    """Column-oriented storage of many jet points (one array per coordinate)."""

    columns: dict[str, np.ndarray]
    count: int

    def env(self) -> dict[str, np.ndarray]:
        return dict(self.columns)

    def point(self, k: int) -> JetPoint:
        u_derivs, v_derivs, extra = {}, {}, {}
        for name, col in self.columns.items():
            if name in ("t", "x"):
                continue
            sym = _jet_by_name(name)
            if sym is None:
                extra[name] = float(col[k])
            elif sym.jet[0] == "u":
                u_derivs[sym.jet[1:]] = float(col[k])
            else:
                v_derivs[sym.jet[1:]] = float(col[k])
        return JetPoint(float(self.columns["t"][k]), float(self.columns["x"][k]),
                        u_derivs, v_derivs, extra)

    def points(self) -> list[JetPoint]:
        return [self.point(k) for k in range(self.count)]

    @classmethod
    def from_points(cls, points: list[JetPoint]) -> JetBatch:
        envs = [p.env() for p in points]
        names = envs[0].keys()
        return cls({n: np.array([e[n] for e in envs]) for n in names}, len(points))


def _jet_by_name(name: str) -> Symbol | None:
    try:
        s = S.SymbolTable().resolve(name)
    except KeyError:
        return None
    return s if s.kind == JET else None


def _check_range(name: str, rng: tuple[float, float]) -> None:
    lo, hi = rng
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
        raise SamplingError(f"empty feasible range for {name}: [{lo}, {hi}]")


def sample_batch(spec: SamplingSpec, rng_seed: int | None = None) -> JetBatch:
    """Deterministic random jets for ``spec`` (arrays of length ``spec.count``)."""
    for name in ("t_range", "x_range", "u_range", "deriv_range", "v_range"):
        _check_range(name, getattr(spec, name))
    if spec.positive_u and spec.u_range[0] <= 0:
        raise SamplingError(
            f"u range {spec.u_range} must lie in (0, inf) while fractional powers of u "
            "are active")
    if spec.count < 1:
        raise SamplingError("sample count must be positive")
    seed = spec.seed if rng_seed is None else rng_seed
    rng = np.random.default_rng(seed)
    m = spec.count
    cols = {"t": rng.uniform(*spec.t_range, m), "x": rng.uniform(*spec.x_range, m)}
    for var in ("u", "v"):
        for i in range(MAX_T_ORDER + 1):
            for j in range(MAX_X_ORDER + 1):
                if i == j == 0:
                    lo_hi = spec.u_range if var == "u" else spec.v_range
                else:
                    lo_hi = spec.deriv_range
                cols[S.jet(var, i, j).name] = rng.uniform(*lo_hi, m)
    batch = JetBatch(cols, m)
    for g in spec.guards:
        from .evaluate import evaluate

        vals = np.broadcast_to(evaluate(g, cols), (m,))
        if np.any(vals <= 0):
            raise SamplingError(f"t range {spec.t_range} violates the guard {g.text} > 0")
    return batch


def sample_jets(spec: SamplingSpec, rng_seed: int | None = None) -> list[JetPoint]:
    return sample_batch(spec, rng_seed).points()


# ---------------------------------------------------------------------------
# identity checking


@dataclass
class IdentityVerdict:
    holds: bool
    max_abs_residual: float
    max_rel_residual: float
    samples: int
    worst_point: JetPoint | None = field(repr=False)
    tolerance: float = 0.0

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "max_abs_residual": self.max_abs_residual,
            "max_rel_residual": self.max_rel_residual,
            "samples": self.samples,
            "tolerance": self.tolerance,
            "worst_point": None if self.worst_point is None else self.worst_point.to_dict(),
        }

    def __bool__(self) -> bool:
        return self.holds


def bind_functions(e: Expr, exprs: Mapping[str, Expr]) -> Expr:
    """Substitute closed forms for coefficient functions and their derivatives.

    ``exprs`` maps a base function name (``"A"``) to an expression in t (and
    x for ``q``); derivative symbols such as ``A_tt`` receive the matching
    partial derivatives.
    """
    mapping = {}
    for s in free_symbols(e):
        if s.kind != FUNCTION or s.base not in exprs:
            continue
        val = exprs[s.base]
        i, j = s.order
        for _ in range(i):
            val = partial(val, S.t)
        for _ in range(j):
            val = partial(val, S.x)
        mapping[s] = val
    return subs(e, mapping) if mapping else e


def _stable_seed(seed: int, name: str) -> int:
    return (seed * 1_000_003 + zlib.crc32(name.encode())) % (2**63)


def build_env(e: Expr, batch: JetBatch, spec: SamplingSpec, bindings: Mapping | None,
              arbitrary: bool, seed: int) -> dict:
    env = batch.env()
    bindings = dict(bindings or {})
    for s in sorted(free_symbols(e), key=lambda s: s.name):
        if s.name in env:
            continue
        if s.name in bindings:
            val = bindings[s.name]
            if callable(val) and not isinstance(val, Expr):
                val = np.asarray(val(env["t"]), dtype=float)
            env[s.name] = val
        elif s.kind in (FUNCTION, CONSTANT) and arbitrary:
            rng = np.random.default_rng(_stable_seed(seed, s.name))
            lo_hi = spec.function_range if s.kind == FUNCTION else spec.constant_range
            env[s.name] = rng.uniform(*lo_hi, batch.count)
    return env


def check_identity(e: Expr, eq=None, spec: SamplingSpec | None = None,
                   tol: float | None = None, bindings: Mapping | None = None,
                   functions: Mapping[str, Expr] | None = None,
                   arbitrary: bool = False, seed: int | None = None) -> IdentityVerdict:
    """Probabilistic zero test of ``e`` at seeded random jet points.

    If ``eq`` is given, ``e`` is reduced on-shell first.  ``functions``
    substitutes closed forms for coefficient functions, ``bindings`` gives
    numeric values (floats, arrays or callables of t) by symbol name, and
    ``arbitrary`` samples every still-unbound coefficient function, function
    derivative and named constant independently (valid for identities that
    must hold for arbitrary functions and constants).  The test at each point is
    ``|e| <= tol * (1 + scale)`` with the cancellation-aware scale of
    :func:`vcgardner.evaluate.magnitude`.
    """
    spec = spec or SamplingSpec()
    tol = spec.tolerance if tol is None else tol
    seed = spec.seed if seed is None else seed
    if functions:
        e = bind_functions(e, functions)
    if eq is not None:
        e = on_shell_reduce(e, eq)
    if e == ZERO:
        return IdentityVerdict(True, 0.0, 0.0, spec.count, None, tol)
    batch = sample_batch(spec, seed)
    env = build_env(e, batch, spec, bindings, arbitrary, seed)
    value, scale = evaluate_with_magnitude(e, env)
    value = np.broadcast_to(np.asarray(value, dtype=float), (batch.count,))
    scale = np.broadcast_to(np.asarray(scale, dtype=float), (batch.count,))
    abs_res = np.abs(value)
    rel_res = abs_res / (1.0 + scale)
    bad = ~np.isfinite(rel_res)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        return IdentityVerdict(False, float("inf"), float("inf"), batch.count,
                               _point_with_bindings(batch, env, k), tol)
    k = int(np.argmax(rel_res))
    holds = bool(np.all(rel_res <= tol))
    return IdentityVerdict(holds, float(abs_res.max()), float(rel_res.max()), batch.count,
                           _point_with_bindings(batch, env, k), tol)


def _point_with_bindings(batch: JetBatch, env: Mapping, k: int) -> JetPoint:
    p = batch.point(k)
    for name, val in env.items():
        if name in batch.columns:
            continue
        arr = np.asarray(val, dtype=float)
        p.extra[name] = float(arr if arr.ndim == 0 else arr[k])
    return p
