"""Standard symbols and the symbol table used by the parser."""

from __future__ import annotations

import re
from functools import lru_cache
from typing import Iterable

from .expr import (
    CONSTANT, FUNCTION, INDEPENDENT, JET, MAX_T_ORDER, MAX_X_ORDER,
    Expr, JetOrderError, Symbol, exp, mul,
)

t = Symbol("t", INDEPENDENT)
x = Symbol("x", INDEPENDENT)

_JET_RE = re.compile(r"^([uv])_(?:\{([tx]+)\}|([tx]+))$")
_DERIV_RE = re.compile(r"^([A-Za-z][A-Za-z0-9]*)_(?:\{([tx]+)\}|([tx]+))$")


def _suffix(i: int, j: int) -> str:
    return "t" * i + "x" * j


@lru_cache(maxsize=None)
def jet(var: str = "u", i: int = 0, j: int = 0) -> Symbol:
    """Jet coordinate of ``var`` differentiated i times in t and j times in x."""
    if var not in ("u", "v"):
        raise ValueError(f"unknown dependent variable {var!r}")
    if i < 0 or j < 0:
        raise ValueError("negative derivative order")
    if i > MAX_T_ORDER or j > MAX_X_ORDER:
        raise JetOrderError(
            f"jet {var}_{_suffix(i, j)} exceeds the stored order "
            f"(t <= {MAX_T_ORDER}, x <= {MAX_X_ORDER})")
    name = var if i == j == 0 else f"{var}_{_suffix(i, j)}"
    return Symbol(name, JET, jet=(var, i, j))


@lru_cache(maxsize=None)
def function_derivative(base: str, deps: tuple[str, ...], order: tuple[int, int]) -> Symbol:
    i, j = order
    if i == j == 0:
        return Symbol(base, FUNCTION, deps=deps)
    return Symbol(f"{base}_{_suffix(i, j)}", FUNCTION, deps=deps, base=base, order=order)


def function(name: str, deps: Iterable[str] = ("t",), **rules: Expr) -> Symbol:
    return Symbol(name, FUNCTION, deps=tuple(deps), rules=rules)


def constant(name: str) -> Symbol:
    return Symbol(name, CONSTANT)


u = jet("u")
u_t = jet("u", 1, 0)
u_x = jet("u", 0, 1)
u_xx = jet("u", 0, 2)
u_xxx = jet("u", 0, 3)
v = jet("v")

A = function("A")
B = function("B")
C = function("C")
Q = function("Q")
H = function("H", t=Q)
L = function("L", t=exp(mul(-1, H)))
p = function("p")
q = function("q", ("t", "x"))
gamma = function("gamma")
beta = function("beta")
tau = function("tau")
alpha = function("alpha")
r = function("r")

CONSTANT_NAMES = ("n", "a", "b", "c", "d", "c1", "c2", "c3", "ct1", "ct2", "ct3",
                  "eps1", "eps2", "eps_r", "k")
n, a, b, c, d, c1, c2, c3, ct1, ct2, ct3, eps1, eps2, eps_r, k = (
    constant(s) for s in CONSTANT_NAMES)


class UnknownSymbolError(KeyError):
    def __init__(self, name: str, declared: Iterable[str]):
        self.name = name
        self.declared = sorted(declared)
        super().__init__(name)

    def __str__(self) -> str:
        return (f"unknown symbol {self.name!r}; declared symbols: "
                + ", ".join(self.declared) + ", plus jets u_<tx...>, v_<tx...>")


class SymbolTable:
    """Name resolution for the parser.

    Plain names are looked up directly; ``u_xxx``/``u_{txx}`` style names
    resolve to jets and ``A_t``/``q_tx`` style names to derivative symbols of
    declared functions.
    """

    def __init__(self, symbols: Iterable[Symbol] = ()):
        self._by_name: dict[str, Symbol] = {}
        for s in symbols:
            self.declare(s)

    def declare(self, s: Symbol) -> Symbol:
        self._by_name[s.name] = s
        return s

    def declare_constant(self, name: str) -> Symbol:
        return self.declare(constant(name))

    def declare_function(self, name: str, deps: Iterable[str] = ("t",)) -> Symbol:
        return self.declare(function(name, deps))

    def copy(self) -> SymbolTable:
        out = SymbolTable()
        out._by_name = dict(self._by_name)
        return out

    def names(self) -> list[str]:
        return sorted(self._by_name)

    def __contains__(self, name: str) -> bool:
        try:
            self.resolve(name)
        except UnknownSymbolError:
            return False
        return True

    def resolve(self, name: str) -> Symbol:
        s = self._by_name.get(name)
        if s is not None:
            return s
        if name in ("u", "v"):
            return jet(name)
        m = _JET_RE.match(name)
        if m:
            suffix = m.group(2) or m.group(3)
            return jet(m.group(1), suffix.count("t"), suffix.count("x"))
        m = _DERIV_RE.match(name)
        if m:
            base = self._by_name.get(m.group(1))
            suffix = m.group(2) or m.group(3)
            if base is not None and base.kind == FUNCTION and base.order == (0, 0):
                i, j = suffix.count("t"), suffix.count("x")
                if (i and "t" not in base.deps) or (j and "x" not in base.deps):
                    raise UnknownSymbolError(name, self._by_name)
                return function_derivative(base.name, base.deps, (i, j))
        raise UnknownSymbolError(name, self._by_name)


def default_table() -> SymbolTable:
    return SymbolTable([t, x, A, B, C, Q, H, L, p, q, gamma, beta, tau, alpha, r,
                        n, a, b, c, d, c1, c2, c3, ct1, ct2, ct3, eps1, eps2, eps_r, k])
