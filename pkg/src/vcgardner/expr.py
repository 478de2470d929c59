"""Immutable expression trees over jets, coefficient functions and constants.

Trees are built through the constructor functions (``add``, ``mul``, ``power``,
``exp``, ``log``, ``integral``) or the operator overloads on :class:`Expr`.
Every constructor applies light normalization: sums and products are
flattened, numeric constants are folded, like terms / like bases are
collected and commutative operands are sorted canonically.  Nothing is ever
expanded or factored; :func:`expand` exists for the few places that need a
polynomial view.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Mapping

__all__ = [
    "Expr", "Num", "Real", "Symbol", "Add", "Mul", "Pow", "Exp", "Log", "Integral",
    "INDEPENDENT", "JET", "FUNCTION", "CONSTANT",
    "ZERO", "ONE", "as_expr", "num", "real", "add", "mul", "power", "exp", "log",
    "integral", "sqrt", "partial", "subs", "expand", "free_symbols", "depends_on",
    "is_number", "number_value", "jet_symbols", "render", "count_nodes",
    "JetOrderError", "MAX_T_ORDER", "MAX_X_ORDER",
]

INDEPENDENT = "independent"
JET = "jet"
FUNCTION = "function"
CONSTANT = "constant"

# Jet coordinates are capped: two t-derivatives (u_tt appears transiently in
# prolongations and Ibragimov vectors) and seven x-derivatives.
MAX_T_ORDER = 2
MAX_X_ORDER = 7


class JetOrderError(ValueError):
    """Raised when a derivative would exceed the stored jet order."""


class Expr:
    __slots__ = ("_hash", "_text", "_free")

    _rank = 99

    def _init_cache(self, h: int) -> None:
        self._hash = h
        self._text = None
        self._free = None

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr) or self._hash != other._hash:
            return False
        return type(self) is type(other) and self._fields() == other._fields()

    def __ne__(self, other: object) -> bool:
        return not self.__eq__(other)

    def _fields(self) -> tuple:
        raise NotImplementedError

    def children(self) -> tuple[Expr, ...]:
        return ()

    @property
    def text(self) -> str:
        if self._text is None:
            self._text = _render(self)
        return self._text

    def sort_key(self) -> tuple[int, str]:
        return (self._rank, self.text)

    def __str__(self) -> str:
        return self.text

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.text}>"

    # arithmetic sugar
    def __add__(self, other):
        other = _operand(other)
        return NotImplemented if other is None else add(self, other)

    def __radd__(self, other):
        other = _operand(other)
        return NotImplemented if other is None else add(other, self)

    def __sub__(self, other):
        other = _operand(other)
        return NotImplemented if other is None else add(self, mul(-1, other))

    def __rsub__(self, other):
        other = _operand(other)
        return NotImplemented if other is None else add(other, mul(-1, self))

    def __mul__(self, other):
        other = _operand(other)
        return NotImplemented if other is None else mul(self, other)

    def __rmul__(self, other):
        other = _operand(other)
        return NotImplemented if other is None else mul(other, self)

    def __truediv__(self, other):
        other = _operand(other)
        return NotImplemented if other is None else mul(self, power(other, -1))

    def __rtruediv__(self, other):
        other = _operand(other)
        return NotImplemented if other is None else mul(other, power(self, -1))

    def __pow__(self, other):
        other = _operand(other)
        return NotImplemented if other is None else power(self, other)

    def __rpow__(self, other):
        other = _operand(other)
        return NotImplemented if other is None else power(other, self)

    def __neg__(self):
        return mul(-1, self)

    def __pos__(self):
        return self


class Num(Expr):
    """Exact rational constant."""

    __slots__ = ("value",)
    _rank = 0

    def __init__(self, value: Fraction):
        self.value = Fraction(value)
        self._init_cache(hash(("Num", self.value)))

    def _fields(self):
        return (self.value,)


class Real(Expr):
    """Floating point constant."""

    __slots__ = ("value",)
    _rank = 0

    def __init__(self, value: float):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"non-finite real constant {value!r}")
        self.value = value
        self._init_cache(hash(("Real", value)))

    def _fields(self):
        return (self.value,)


class Symbol(Expr):
    """A named leaf.

    ``kind`` is one of INDEPENDENT, JET, FUNCTION or CONSTANT.  Jets carry
    ``jet = (var, i, j)`` meaning ``var`` differentiated ``i`` times in t and
    ``j`` times in x.  Function symbols carry their dependency set and, for
    derivative symbols such as ``A_t``, the base name and derivative index.
    ``rules`` maps an independent variable name to a closed-form derivative
    (``H`` has ``{"t": Q}``); rules do not take part in equality.
    """

    __slots__ = ("name", "kind", "jet", "deps", "base", "order", "rules")
    _rank = 1

    def __init__(self, name: str, kind: str, *, jet=None, deps=(), base=None,
                 order=(0, 0), rules=None):
        self.name = name
        self.kind = kind
        self.jet = jet
        self.deps = tuple(deps)
        self.base = base if base is not None else name
        self.order = tuple(order)
        self.rules = dict(rules or {})
        self._init_cache(hash(("Symbol", name, kind)))

    def _fields(self):
        return (self.name, self.kind)

    def with_rules(self, **rules: Expr) -> Symbol:
        return Symbol(self.name, self.kind, jet=self.jet, deps=self.deps,
                      base=self.base, order=self.order, rules=rules)


class Add(Expr):
    __slots__ = ("terms",)
    _rank = 6

    def __init__(self, terms: tuple[Expr, ...]):
        self.terms = terms
        self._init_cache(hash(("Add", terms)))

    def _fields(self):
        return self.terms

    def children(self):
        return self.terms


class Mul(Expr):
    """Product ``coeff * f1 * f2 * ...`` with a numeric coefficient kept apart."""

    __slots__ = ("coeff", "factors")
    _rank = 3

    def __init__(self, coeff, factors: tuple[Expr, ...]):
        self.coeff = coeff
        self.factors = factors
        self._init_cache(hash(("Mul", coeff, factors)))

    def _fields(self):
        return (type(self.coeff), self.coeff, self.factors)

    def children(self):
        return self.factors


class Pow(Expr):
    """``base ** exponent``.

    A non-integer exponent implies the assumption ``base > 0``; the
    evaluator enforces it (see :attr:`assumes_positive_base`).
    """

    __slots__ = ("base", "exponent")
    _rank = 2

    def __init__(self, base: Expr, exponent: Expr):
        self.base = base
        self.exponent = exponent
        self._init_cache(hash(("Pow", base, exponent)))

    def _fields(self):
        return (self.base, self.exponent)

    def children(self):
        return (self.base, self.exponent)

    @property
    def assumes_positive_base(self) -> bool:
        e = self.exponent
        return not (isinstance(e, Num) and e.value.denominator == 1)


class Exp(Expr):
    __slots__ = ("arg",)
    _rank = 4

    def __init__(self, arg: Expr):
        self.arg = arg
        self._init_cache(hash(("Exp", arg)))

    def _fields(self):
        return (self.arg,)

    def children(self):
        return (self.arg,)


class Log(Expr):
    __slots__ = ("arg",)
    _rank = 5

    def __init__(self, arg: Expr):
        self.arg = arg
        self._init_cache(hash(("Log", arg)))

    def _fields(self):
        return (self.arg,)

    def children(self):
        return (self.arg,)


class Integral(Expr):
    """Antiderivative placeholder ``int_{lower}^{var} integrand d var``.

    The integrand may only depend on ``var`` and constants.  ``upper`` bounds
    the interval on which the numeric interpolant is tabulated.
    """

    __slots__ = ("integrand", "var", "lower", "upper")
    _rank = 7

    def __init__(self, integrand: Expr, var: Symbol, lower: float, upper: float):
        self.integrand = integrand
        self.var = var
        self.lower = float(lower)
        self.upper = float(upper)
        self._init_cache(hash(("Integral", integrand, var, self.lower, self.upper)))

    def _fields(self):
        return (self.integrand, self.var, self.lower, self.upper)

    def children(self):
        return (self.integrand,)


ZERO = Num(Fraction(0))
ONE = Num(Fraction(1))
_MINUS_ONE = Num(Fraction(-1))


# ---------------------------------------------------------------------------
# numeric helpers


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(value, (int, Fraction, Rational)):
        return Num(Fraction(value))
    if isinstance(value, float):
        return Real(value)
    try:
        import numpy as np

        if isinstance(value, np.integer):
            return Num(Fraction(int(value)))
        if isinstance(value, np.floating):
            return Real(float(value))
    except ImportError:  # pragma: no cover
        pass
    raise TypeError(f"cannot convert {value!r} to an expression")


def _operand(value):
    """as_expr for operator overloads; None lets Python try the other operand."""
    try:
        return as_expr(value)
    except TypeError:
        return None


def num(value) -> Expr:
    return Num(Fraction(value))


def real(value: float) -> Expr:
    return Real(float(value))


def is_number(e: Expr) -> bool:
    return isinstance(e, (Num, Real))


def number_value(e: Expr):
    """Fraction or float held by a numeric leaf."""
    if isinstance(e, (Num, Real)):
        return e.value
    raise TypeError(f"{e} is not a numeric constant")


def _num_node(value) -> Expr:
    if isinstance(value, float):
        return Real(value)
    return Num(value)


def _is_zero_value(value) -> bool:
    return value == 0


# ---------------------------------------------------------------------------
# constructors


def _term_split(term: Expr):
    """Split a term into (numeric coefficient, hashable rest key, rest expr)."""
    if isinstance(term, Mul):
        return term.coeff, term.factors
    return Fraction(1), (term,)


def _from_factors(coeff, factors: tuple[Expr, ...]) -> Expr:
    if _is_zero_value(coeff):
        return ZERO
    if not factors:
        return _num_node(coeff)
    if coeff == 1 and len(factors) == 1 and not isinstance(coeff, float):
        return factors[0]
    return Mul(coeff, factors)


def add(*terms) -> Expr:
    const = Fraction(0)
    collected: dict[tuple, object] = {}
    order: list[tuple] = []
    stack = [as_expr(t) for t in terms]
    stack.reverse()
    while stack:
        t = stack.pop()
        if isinstance(t, Add):
            stack.extend(reversed(t.terms))
            continue
        if isinstance(t, (Num, Real)):
            const = const + t.value
            continue
        coeff, key = _term_split(t)
        if key in collected:
            collected[key] = collected[key] + coeff
        else:
            collected[key] = coeff
            order.append(key)
    out = []
    for key in order:
        coeff = collected[key]
        if _is_zero_value(coeff):
            continue
        out.append(_from_factors(coeff, key))
    if not _is_zero_value(const) or (isinstance(const, float) and not out):
        out.append(_num_node(const))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    out.sort(key=Expr.sort_key)
    return Add(tuple(out))


def _base_exp(f: Expr) -> tuple[Expr, Expr]:
    if isinstance(f, Pow):
        return f.base, f.exponent
    return f, ONE


def mul(*factors) -> Expr:
    coeff = Fraction(1)
    bases: dict[Expr, list[Expr]] = {}
    order: list[Expr] = []
    exp_args: list[Expr] = []
    stack = [as_expr(f) for f in factors]
    stack.reverse()
    while stack:
        f = stack.pop()
        if isinstance(f, Mul):
            coeff = coeff * f.coeff
            stack.extend(reversed(f.factors))
            continue
        if isinstance(f, (Num, Real)):
            coeff = coeff * f.value
            continue
        if isinstance(f, Exp):
            exp_args.append(f.arg)
            continue
        b, e = _base_exp(f)
        if b in bases:
            bases[b].append(e)
        else:
            bases[b] = [e]
            order.append(b)
    if _is_zero_value(coeff):
        return ZERO
    out: list[Expr] = []
    for b in order:
        es = bases[b]
        e = es[0] if len(es) == 1 else add(*es)
        p = power(b, e)
        if isinstance(p, (Num, Real)):
            coeff = coeff * p.value
        elif isinstance(p, Mul):
            coeff = coeff * p.coeff
            out.extend(p.factors)
        else:
            out.append(p)
    if exp_args:
        ex = exp(add(*exp_args))
        if isinstance(ex, (Num, Real)):
            coeff = coeff * ex.value
        elif isinstance(ex, Mul):
            coeff = coeff * ex.coeff
            out.extend(ex.factors)
        else:
            out.append(ex)
    if _is_zero_value(coeff):
        return ZERO
    if len(out) > 1:
        # products of powers produced above may repeat a base; merge once more
        seen = {}
        merged = False
        for f in out:
            b, _ = _base_exp(f)
            if b in seen:
                merged = True
                break
            seen[b] = True
        if merged:
            return mul(_num_node(coeff), *out)
    out.sort(key=Expr.sort_key)
    return _from_factors(coeff, tuple(out))


def _rational_power(base: Fraction, e: Fraction):
    """Exact value of base**e when it is rational, else None."""
    if e.denominator == 1:
        if base == 0 and e < 0:
            raise ZeroDivisionError("0 raised to a negative power")
        return base ** int(e)
    if base < 0:
        return None
    q = e.denominator
    num_root = round(base.numerator ** (1.0 / q))
    den_root = round(base.denominator ** (1.0 / q))
    for nr in (num_root - 1, num_root, num_root + 1):
        if nr >= 0 and nr ** q == base.numerator:
            for dr in (den_root - 1, den_root, den_root + 1):
                if dr > 0 and dr ** q == base.denominator:
                    return Fraction(nr, dr) ** e.numerator
    return None


def power(base, exponent) -> Expr:
    base = as_expr(base)
    exponent = as_expr(exponent)
    if isinstance(exponent, (Num, Real)):
        ev = exponent.value
        if ev == 0:
            return ONE
        if ev == 1:
            return base
        is_int = isinstance(ev, Fraction) and ev.denominator == 1
        if isinstance(base, Num):
            if isinstance(ev, Fraction):
                val = _rational_power(base.value, ev)
                if val is not None:
                    return Num(val)
            elif base.value > 0:
                return Real(float(base.value) ** ev)
        elif isinstance(base, Real):
            if base.value > 0 or is_int:
                return Real(base.value ** float(ev))
        if isinstance(base, Pow) and is_int:
            return power(base.base, mul(base.exponent, exponent))
        if isinstance(base, Mul) and is_int:
            c = base.coeff
            cval = c ** int(ev) if isinstance(c, Fraction) else c ** float(ev)
            return mul(_num_node(cval), *[power(f, exponent) for f in base.factors])
    if isinstance(base, Num) and base.value == 1:
        return ONE
    if isinstance(base, Exp):
        return exp(mul(base.arg, exponent))
    return Pow(base, exponent)


def exp(arg) -> Expr:
    arg = as_expr(arg)
    if isinstance(arg, Num) and arg.value == 0:
        return ONE
    if isinstance(arg, Real):
        return Real(math.exp(arg.value))
    if isinstance(arg, Log):
        return arg.arg
    # exp(c*log(a) + rest) -> a^c * exp(rest)
    terms = arg.terms if isinstance(arg, Add) else (arg,)
    logs, rest = [], []
    for term in terms:
        if isinstance(term, Log):
            logs.append(term.arg)
        elif isinstance(term, Mul) and sum(isinstance(f, Log) for f in term.factors) == 1:
            lg = next(f for f in term.factors if isinstance(f, Log))
            others = [f for f in term.factors if f is not lg]
            logs.append(power(lg.arg, mul(_num_node(term.coeff), *others)))
        else:
            rest.append(term)
    if logs:
        return mul(*logs, exp(add(*rest)))
    return Exp(arg)


def log(arg) -> Expr:
    arg = as_expr(arg)
    if isinstance(arg, Num) and arg.value == 1:
        return ZERO
    if isinstance(arg, Exp):
        return arg.arg
    if isinstance(arg, Real) and arg.value > 0:
        return Real(math.log(arg.value))
    return Log(arg)


def sqrt(arg) -> Expr:
    return power(arg, Num(Fraction(1, 2)))


def integral(integrand, var: Symbol, lower: float, upper: float) -> Expr:
    integrand = as_expr(integrand)
    if isinstance(integrand, Num) and integrand.value == 0:
        return ZERO
    return Integral(integrand, var, lower, upper)


# ---------------------------------------------------------------------------
# traversal utilities


def _rebuild(e: Expr, kids: tuple[Expr, ...]) -> Expr:
    if isinstance(e, Add):
        return add(*kids)
    if isinstance(e, Mul):
        return mul(_num_node(e.coeff), *kids)
    if isinstance(e, Pow):
        return power(kids[0], kids[1])
    if isinstance(e, Exp):
        return exp(kids[0])
    if isinstance(e, Log):
        return log(kids[0])
    if isinstance(e, Integral):
        return integral(kids[0], e.var, e.lower, e.upper)
    return e


def free_symbols(e: Expr) -> frozenset[Symbol]:
    if e._free is not None:
        return e._free
    # iterative post-order to survive deep trees
    stack = [(e, False)]
    while stack:
        node, done = stack.pop()
        if node._free is not None:
            continue
        if isinstance(node, Symbol):
            node._free = frozenset((node,))
            continue
        kids = node.children()
        if isinstance(node, Integral):
            kids = kids + (node.var,)
        if done or not kids:
            acc = frozenset()
            for k in kids:
                acc = acc | k._free
            node._free = acc
            continue
        stack.append((node, True))
        for k in kids:
            if k._free is None:
                stack.append((k, False))
    return e._free


def depends_on(e: Expr, var: str) -> bool:
    """True if ``e`` depends on the independent variable named ``var``.

    Function symbols depend on the variables in their ``deps``; jets depend
    on both t and x.
    """
    for s in free_symbols(e):
        if s.kind == INDEPENDENT and s.name == var:
            return True
        if s.kind == FUNCTION and var in s.deps:
            return True
        if s.kind == JET:
            return True
    return False


def jet_symbols(e: Expr, var: str | None = None) -> list[Symbol]:
    out = [s for s in free_symbols(e) if s.kind == JET and (var is None or s.jet[0] == var)]
    out.sort(key=lambda s: (s.jet[0], s.jet[1], s.jet[2]))
    return out


def subs(e: Expr, mapping: Mapping[Symbol, Expr]) -> Expr:
    """Replace symbols by expressions (simultaneously) and renormalize."""
    if not mapping:
        return e
    mapping = {k: as_expr(v) for k, v in mapping.items()}
    keys = frozenset(mapping)
    memo: dict[Expr, Expr] = {}

    def go(node: Expr) -> Expr:
        hit = memo.get(node)
        if hit is not None:
            return hit
        if not (free_symbols(node) & keys):
            res = node
        elif isinstance(node, Symbol):
            res = mapping[node]
        else:
            res = _rebuild(node, tuple(go(k) for k in node.children()))
        memo[node] = res
        return res

    return go(e)


def count_nodes(e: Expr) -> int:
    seen = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        stack.extend(n.children())
    return len(seen)


# ---------------------------------------------------------------------------
# differentiation


def derive(e: Expr, leaf: Callable[[Symbol], Expr], var_name: str | None) -> Expr:
    """Apply a derivation defined by its action on symbols.

    ``leaf`` returns the derivative of each symbol.  ``var_name`` names the
    independent variable whose partial an Integral placeholder answers with
    its integrand (``None`` means integrals are constants).
    """
    memo: dict[Expr, Expr] = {}

    def d(node: Expr) -> Expr:
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, (Num, Real)):
            res = ZERO
        elif isinstance(node, Symbol):
            res = leaf(node)
        elif isinstance(node, Add):
            res = add(*[d(t) for t in node.terms])
        elif isinstance(node, Mul):
            fs = node.factors
            parts = []
            for i, f in enumerate(fs):
                df = d(f)
                if isinstance(df, Num) and df.value == 0:
                    continue
                parts.append(mul(_num_node(node.coeff), df, *fs[:i], *fs[i + 1:]))
            res = add(*parts)
        elif isinstance(node, Pow):
            b, p = node.base, node.exponent
            db = d(b)
            dp = d(p)
            parts = []
            if not (isinstance(db, Num) and db.value == 0):
                parts.append(mul(p, power(b, add(p, _MINUS_ONE)), db))
            if not (isinstance(dp, Num) and dp.value == 0):
                parts.append(mul(node, log(b), dp))
            res = add(*parts)
        elif isinstance(node, Exp):
            res = mul(node, d(node.arg))
        elif isinstance(node, Log):
            res = mul(d(node.arg), power(node.arg, _MINUS_ONE))
        elif isinstance(node, Integral):
            if var_name is not None and node.var.name == var_name:
                res = node.integrand
            else:
                res = ZERO
        else:  # pragma: no cover
            raise TypeError(type(node))
        memo[node] = res
        return res

    return d(e)


def _function_derivative(s: Symbol, var: str) -> Expr:
    if var not in s.deps:
        return ZERO
    if var in s.rules:
        return s.rules[var]
    from . import symbols as _sym

    i, j = s.order
    i, j = (i + 1, j) if var == "t" else (i, j + 1)
    return _sym.function_derivative(s.base, s.deps, (i, j))


def partial(e: Expr, s: Symbol) -> Expr:
    """Partial derivative with every other symbol held independent.

    Coefficient functions answer partials in their own variables with
    derivative symbols (A -> A_t) or their closed-form rule (H -> Q).
    """
    if s.kind == INDEPENDENT:
        name = s.name

        def leaf(sym: Symbol) -> Expr:
            if sym == s:
                return ONE
            if sym.kind == FUNCTION:
                return _function_derivative(sym, name)
            return ZERO

        return derive(e, leaf, name)

    def leaf(sym: Symbol) -> Expr:
        return ONE if sym == s else ZERO

    if s not in free_symbols(e):
        return ZERO
    return derive(e, leaf, None)


# ---------------------------------------------------------------------------
# polynomial expansion (explicit; never applied implicitly)


def expand(e: Expr) -> Expr:
    """Distribute products over sums and integer powers of sums."""
    memo: dict[Expr, Expr] = {}

    def terms_of(x: Expr) -> tuple[Expr, ...]:
        return x.terms if isinstance(x, Add) else (x,)

    def go(node: Expr) -> Expr:
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Add):
            res = add(*[go(t) for t in node.terms])
        elif isinstance(node, Mul):
            acc = [_num_node(node.coeff)]
            for f in node.factors:
                ft = terms_of(go(f))
                acc = [mul(a, b) for a in acc for b in ft]
            res = add(*acc)
        elif isinstance(node, Pow):
            b = go(node.base)
            p = go(node.exponent)
            if (isinstance(b, Add) and isinstance(p, Num) and p.value.denominator == 1
                    and p.value > 1):
                acc = [ONE]
                for _ in range(int(p.value)):
                    acc = [mul(a, c) for a in acc for c in b.terms]
                res = add(*acc)
            else:
                res = power(b, p)
        elif isinstance(node, (Exp, Log)):
            res = _rebuild(node, (go(node.arg),))
        elif isinstance(node, Integral):
            res = node
        else:
            res = node
        memo[node] = res
        return res

    return go(e)


# ---------------------------------------------------------------------------
# rendering (the grammar is documented in docs/grammar.md)

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_UNARY = 3
_PREC_POW = 4
_PREC_ATOM = 5


def _fraction_text(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _real_text(v: float) -> str:
    s = repr(v)
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def _prec(e: Expr) -> int:
    if isinstance(e, Add):
        return _PREC_ADD
    if isinstance(e, Mul):
        if e.coeff < 0:
            return _PREC_UNARY - 1  # rendered with a leading minus
        return _PREC_MUL
    if isinstance(e, Num):
        v = e.value
        if v < 0:
            return _PREC_UNARY - 1
        return _PREC_ATOM if v.denominator == 1 else _PREC_MUL
    if isinstance(e, Real):
        return _PREC_UNARY - 1 if e.value < 0 else _PREC_ATOM
    if isinstance(e, Pow):
        return _PREC_POW
    return _PREC_ATOM


def _wrap(e: Expr, min_prec: int) -> str:
    s = e.text
    return f"({s})" if _prec(e) < min_prec else s


def _render_product(coeff, factors: tuple[Expr, ...]) -> str:
    numer: list[str] = []
    denom: list[Expr] = []
    for f in factors:
        if (isinstance(f, Pow) and isinstance(f.exponent, Num) and f.exponent.value < 0
                and f.exponent.value.denominator == 1):
            denom.append(power(f.base, Num(-f.exponent.value)))
        else:
            numer.append(_wrap(f, _PREC_MUL + 1 if isinstance(f, Mul) else _PREC_MUL))
    sign = ""
    c = coeff
    if c < 0:
        sign = "-"
        c = -c
    if isinstance(c, float):
        lead = [_real_text(c)]
    elif c == 1:
        lead = []
    elif c.denominator == 1:
        lead = [str(c.numerator)]
    else:
        # a rational coefficient renders as "p/q*..." which re-parses left to right
        lead = [_fraction_text(c)]
    parts = lead + numer
    if not parts:
        parts = ["1"]
    s = "*".join(parts)
    if denom:
        if len(denom) == 1:
            d = _wrap(denom[0], _PREC_POW)
        else:
            d = "(" + "*".join(_wrap(x, _PREC_MUL + 1) for x in denom) + ")"
        s = f"{s}/{d}"
    return sign + s


def _render(e: Expr) -> str:
    if isinstance(e, Num):
        return _fraction_text(e.value)
    if isinstance(e, Real):
        return _real_text(e.value)
    if isinstance(e, Symbol):
        return e.name
    if isinstance(e, Add):
        out = []
        for i, t in enumerate(e.terms):
            s = t.text
            if i == 0:
                out.append(_wrap(t, _PREC_ADD + 1) if _prec(t) < _PREC_ADD else s)
            elif s.startswith("-"):
                out.append(" - " + s[1:])
            else:
                out.append(" + " + s)
        return "".join(out)
    if isinstance(e, Mul):
        return _render_product(e.coeff, e.factors)
    if isinstance(e, Pow):
        b = _wrap(e.base, _PREC_ATOM)
        x = e.exponent
        if isinstance(x, Num) and x.value >= 0 and x.value.denominator == 1:
            xs = x.text
        elif isinstance(x, Symbol):
            xs = x.text
        else:
            xs = f"({x.text})"
        return f"{b}^{xs}"
    if isinstance(e, Exp):
        return f"exp({e.arg.text})"
    if isinstance(e, Log):
        return f"log({e.arg.text})"
    if isinstance(e, Integral):
        return (f"int({e.integrand.text}, {e.var.name}, {_real_text(e.lower)}, "
                f"{_real_text(e.upper)})")
    raise TypeError(type(e))  # pragma: no cover


def render(e: Expr) -> str:
    return e.text


def walk(e: Expr) -> Iterable[Expr]:
    seen = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        yield n
        stack.extend(n.children())
