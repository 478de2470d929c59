"""Vectorized numeric evaluation of expression trees."""

from __future__ import annotations

from typing import Mapping

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .expr import Add, Exp, Expr, Integral, Log, Mul, Num, Pow, Real, Symbol, free_symbols

__all__ = ["evaluate", "magnitude", "evaluate_with_magnitude", "EvaluationError", "UnboundSymbolError",
           "DomainError", "integral_table"]


class EvaluationError(ValueError):
    pass


class UnboundSymbolError(EvaluationError):
    def __init__(self, names):
        self.names = sorted(names)
        super().__init__("unbound symbols: " + ", ".join(self.names))


class DomainError(EvaluationError):
    """Fractional power of a non-positive base, log of a non-positive value, ..."""

    def __init__(self, message: str, subtree: Expr, index: int | None):
        self.subtree = subtree
        self.index = index
        where = "" if index is None else f" (sample {index})"
        super().__init__(f"{message}{where}: {subtree.text}")


_QUAD_NODES, _QUAD_WEIGHTS = np.polynomial.legendre.leggauss(8)
_TABLE_POINTS = 2049
_TABLES: dict[Integral, CubicHermiteSpline] = {}


def integral_table(node: Integral) -> CubicHermiteSpline:
    """Cumulative-quadrature interpolant for an Integral placeholder.

    The antiderivative is tabulated on a 2049-point grid with composite
    8-point Gauss-Legendre panels, then interpolated by a cubic Hermite
    spline whose slopes are the exact integrand values (C1, O(h^4) error).
    """
    table = _TABLES.get(node)
    if table is not None:
        return table
    var = node.var
    extra = free_symbols(node.integrand) - {var}
    if extra:
        raise UnboundSymbolError(s.name for s in extra)
    grid = np.linspace(node.lower, node.upper, _TABLE_POINTS)
    h = grid[1] - grid[0]
    mids = 0.5 * (grid[:-1] + grid[1:])
    nodes = (mids[:, None] + 0.5 * h * _QUAD_NODES[None, :]).ravel()
    f_nodes = np.broadcast_to(
        evaluate(node.integrand, {var.name: nodes}), nodes.shape).reshape(-1, len(_QUAD_NODES))
    panels = 0.5 * h * (f_nodes @ _QUAD_WEIGHTS)
    values = np.concatenate([[0.0], np.cumsum(panels)])
    slopes = np.broadcast_to(evaluate(node.integrand, {var.name: grid}), grid.shape)
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(slopes))):
        raise DomainError("quadrature failure: non-finite integrand", node.integrand, None)
    table = CubicHermiteSpline(grid, values, np.array(slopes, dtype=float))
    _TABLES[node] = table
    return table


def _is_integral_array(v) -> bool:
    return bool(np.all(np.asarray(v) == np.round(v)))


def _first_bad(mask) -> int | None:
    mask = np.atleast_1d(mask)
    idx = np.flatnonzero(mask)
    return int(idx[0]) if idx.size else None


def evaluate(e: Expr, env: Mapping[str, object]):
    """Evaluate ``e`` with symbols bound by name in ``env``.

    Values may be floats or equal-length numpy arrays (one entry per sample);
    the result broadcasts accordingly.
    """
    return _Evaluator(env).value(e)


def magnitude(e: Expr, env: Mapping[str, object]):
    """Cancellation-aware scale of ``e`` at each sample.

    Sums take the largest magnitude of their terms, products multiply the
    magnitudes of their factors and positive integer powers raise the
    magnitude of their base; every other node contributes its absolute
    value.  Floating point round-off in evaluating ``e`` is bounded by a
    small multiple of this scale.
    """
    return _Evaluator(env).magnitude(e)


def evaluate_with_magnitude(e: Expr, env: Mapping[str, object]):
    ev = _Evaluator(env)
    return ev.value(e), ev.magnitude(e)


class _Evaluator:
    def __init__(self, env: Mapping[str, object]):
        self.env = env
        self.values: dict[Expr, object] = {}
        self.mags: dict[Expr, object] = {}

    def value(self, e: Expr):
        missing = [s.name for s in free_symbols(e) if s.name not in self.env]
        if missing:
            raise UnboundSymbolError(missing)
        with np.errstate(all="ignore"):
            return self._value(e)

    def _value(self, node: Expr):
        hit = self.values.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Num):
            val = float(node.value)
        elif isinstance(node, Real):
            val = node.value
        elif isinstance(node, Symbol):
            val = self.env[node.name]
        elif isinstance(node, Add):
            val = self._value(node.terms[0])
            for term in node.terms[1:]:
                val = val + self._value(term)
        elif isinstance(node, Mul):
            val = float(node.coeff)
            for f in node.factors:
                val = val * self._value(f)
        elif isinstance(node, Pow):
            val = _eval_pow(node, self._value(node.base), self._value(node.exponent))
        elif isinstance(node, Exp):
            val = np.exp(self._value(node.arg))
        elif isinstance(node, Log):
            arg = self._value(node.arg)
            bad = np.asarray(arg) <= 0
            if np.any(bad):
                raise DomainError("log of a non-positive value", node, _first_bad(bad))
            val = np.log(arg)
        elif isinstance(node, Integral):
            arg = np.asarray(self._value(node.var), dtype=float)
            tol = 1e-12 * max(1.0, abs(node.upper - node.lower))
            bad = (arg < node.lower - tol) | (arg > node.upper + tol)
            if np.any(bad):
                raise DomainError("integral evaluated outside its tabulated interval",
                                  node, _first_bad(bad))
            val = integral_table(node)(arg)
            if np.ndim(val) == 0:
                val = float(val)
        else:  # pragma: no cover
            raise TypeError(type(node))
        self.values[node] = val
        return val

    def magnitude(self, e: Expr):
        self.value(e)
        with np.errstate(all="ignore"):
            return self._mag(e)

    def _mag(self, node: Expr):
        hit = self.mags.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Add):
            out = self._mag(node.terms[0])
            for term in node.terms[1:]:
                out = np.maximum(out, self._mag(term))
        elif isinstance(node, Mul):
            out = abs(float(node.coeff))
            for f in node.factors:
                out = out * self._mag(f)
        elif (isinstance(node, Pow) and isinstance(node.exponent, Num)
              and node.exponent.value.denominator == 1 and node.exponent.value > 0):
            out = self._mag(node.base) ** int(node.exponent.value)
        else:
            out = np.abs(self.values[node])
        self.mags[node] = out
        return out




def _eval_pow(node: Pow, base, expo):
    ex = node.exponent
    if isinstance(ex, Num) and ex.value.denominator == 1:
        k = int(ex.value)
        if k < 0:
            zero = np.asarray(base) == 0
            if np.any(zero):
                raise DomainError("division by zero", node, _first_bad(zero))
            return np.power(base, float(k))
        return base ** k
    if _is_integral_array(expo):
        zero = (np.asarray(base) == 0) & (np.asarray(expo) < 0)
        if np.any(zero):
            raise DomainError("division by zero", node, _first_bad(zero))
        return np.power(base, expo)
    bad = np.asarray(base) <= 0
    if np.any(bad):
        raise DomainError("fractional power of a non-positive base", node, _first_bad(bad))
    return np.exp(expo * np.log(base))
