"""Periodic pseudo-spectral solver with a conserved-functional monitor.

u_t = -A(t) u^n u_x - u^(2n) u_x - u_xxx - Q(t) u on [0, P).

The dispersive term is integrated exactly in Fourier space (integrating
factor); the advection and damping terms go through classical RK4.  The
advection terms are used in flux form, D_x(A u^(n+1)/(n+1) + u^(2n+1)/(2n+1)),
so the mean of u changes only through Q, and their transform is truncated
by the 2/3 rule.
"""

from __future__ import annotations

import csv
import io
import math
from fractions import Fraction
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from . import symbols as S
from .evaluate import evaluate
from .expr import (
    Expr, Num, ZERO, depends_on, free_symbols, is_number, jet_symbols, mul, number_value,
    partial, subs,
)
from .jets import on_shell_reduce
from .model import GardnerEquation, ModelError, coefficient_values

__all__ = [
    "Grid", "InitialProfile", "SolverConfig", "SimState", "SimulationResult", "SimulationError",
    "step", "simulate", "self_convergence_order", "linear_exact",
]


class SimulationError(ModelError):
    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class Grid:
    N: int = 256
    period: float = 2 * math.pi

    def __post_init__(self):
        if self.N < 64 or self.N & (self.N - 1):
            raise ModelError(f"N must be a power of two >= 64, got {self.N}")
        if not self.period > 0:
            raise ModelError("period must be positive")

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N) * (self.period / self.N)

    @property
    def k(self) -> np.ndarray:
        return 2 * np.pi / self.period * np.fft.rfftfreq(self.N, 1.0 / self.N)

    @property
    def dealias(self) -> np.ndarray:
        idx = np.arange(self.N // 2 + 1)
        return idx < self.N / 3

    def derivative(self, u: np.ndarray, order: int) -> np.ndarray:
        if order == 0:
            return u
        return np.fft.irfft((1j * self.k) ** order * np.fft.rfft(u), n=self.N)

    def integrate(self, f: np.ndarray) -> float:
        # trapezoid on a periodic grid, spectrally accurate
        return float(np.sum(f) * self.period / self.N)


@dataclass(frozen=True)
class InitialProfile:
    """u0 = mean + sum_k a_k cos(2 pi k x / P + phase_k)."""

    mean: float = 1.0
    modes: tuple[tuple[int, float, float], ...] = ((1, 0.3, 0.0), (2, 0.1, 0.5))

    def __call__(self, grid: Grid) -> np.ndarray:
        u = np.full(grid.N, float(self.mean))
        for k, a, phase in self.modes:
            u += a * np.cos(2 * np.pi * k * grid.x / grid.period + phase)
        return u

    def positive(self) -> bool:
        return self.mean > sum(abs(a) for _, a, _ in self.modes)

    @classmethod
    def from_dict(cls, d: Mapping) -> InitialProfile:
        return cls(float(d.get("mean", 1.0)),
                   tuple((int(k), float(a), float(p)) for k, a, p in d.get("modes", ())))


@dataclass(frozen=True)
class SolverConfig:
    N: int = 256
    period: float = 2 * math.pi
    t_final: float = 1.0
    dt: float = 1e-3
    outputs: int = 20
    linear_only: bool = False
    keep_fields: bool = False

    @property
    def grid(self) -> Grid:
        return Grid(self.N, self.period)

    @classmethod
    def from_dict(cls, d: Mapping) -> SolverConfig:
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SimState:
    t: float
    u: np.ndarray
    acc: np.ndarray = field(default_factory=lambda: np.zeros(0))


# ---------------------------------------------------------------------------
# right-hand side


class _Rhs:
    """Nonlinear part of u_t in Fourier space, with the dispersion factored out."""

    def __init__(self, eq: GardnerEquation, grid: Grid, linear_only: bool = False):
        eq.require_canonical("simulate")
        n = eq.n
        if not is_number(n):
            raise ModelError("the solver needs a numeric n")
        self.n = float(number_value(n))
        self.eq = eq
        self.grid = grid
        self.ik = 1j * grid.k
        self.L = 1j * grid.k ** 3  # u_t = -u_xxx  ->  d/dt u_hat = i k^3 u_hat
        self.mask = grid.dealias
        self.linear_only = linear_only
        self.fractional = eq.fractional
        self._aq_cache: dict[float, tuple[float, float]] = {}

    def coefficients(self, t: float) -> tuple[float, float]:
        got = self._aq_cache.get(t)
        if got is None:
            vals = coefficient_values(self.eq, np.array([t]))
            got = (float(vals["A"][0]), float(vals["Q"][0]))
            self._aq_cache[t] = got
        return got

    def __call__(self, t: float, u_hat: np.ndarray) -> np.ndarray:
        A, Q = self.coefficients(t)
        if self.linear_only:
            return -Q * u_hat
        u = np.fft.irfft(u_hat, n=self.grid.N)
        if self.fractional and np.any(u <= 0):
            raise SimulationError(
                f"positivity lost at t = {t:.6g} (min u = {u.min():.3g}); "
                f"u^{self.n:g} is undefined", t)
        n = self.n
        with np.errstate(over="ignore", invalid="ignore"):  # blow-up is caught in step
            flux = u ** (2 * n + 1) / (2 * n + 1)
            if A != 0.0:
                flux = flux + A * u ** (n + 1) / (n + 1)
            flux_hat = np.fft.rfft(flux) * self.mask
        return -self.ik * flux_hat - Q * u_hat


def step(state: SimState, eq: GardnerEquation, dt: float, grid: Grid | None = None,
         rates: Sequence[Callable[[float, np.ndarray], float]] = (),
         linear_only: bool = False, _rhs: _Rhs | None = None) -> SimState:
    """One integrating-factor RK4 step.

    ``rates`` are scalar functionals r(t, u) integrated alongside with the
    same stage weights; the result accumulates in ``state.acc``.
    """
    grid = grid or Grid(len(state.u))
    rhs = _rhs or _Rhs(eq, grid, linear_only)
    t, h = state.t, dt
    E = np.exp(rhs.L * h / 2)
    E2 = E * E
    v = np.fft.rfft(state.u)

    def rate_values(tt, vh):
        if not rates:
            return np.zeros(0)
        u = np.fft.irfft(vh, n=grid.N)
        return np.array([r(tt, u) for r in rates])

    k1 = rhs(t, v)
    r1 = rate_values(t, v)
    v2 = E * (v + h / 2 * k1)
    k2 = rhs(t + h / 2, v2)
    r2 = rate_values(t + h / 2, v2)
    v3 = E * v + h / 2 * k2
    k3 = rhs(t + h / 2, v3)
    r3 = rate_values(t + h / 2, v3)
    v4 = E2 * v + h * E * k3
    k4 = rhs(t + h, v4)
    r4 = rate_values(t + h, v4)
    new = E2 * v + h / 6 * (E2 * k1 + 2 * E * (k2 + k3) + k4)
    u = np.fft.irfft(new, n=grid.N)
    if not np.all(np.isfinite(u)):
        raise SimulationError(f"blow-up: non-finite values at t = {t + h:.6g}", t + h)
    acc = state.acc + h / 6 * (r1 + 2 * r2 + 2 * r3 + r4) if rates else state.acc
    return SimState(t + h, u, acc)


# ---------------------------------------------------------------------------
# monitoring


def _x_polynomial(T: Expr, max_degree: int = 8) -> list[tuple[int, Expr]]:
    """[(m, f_m)] with T = sum_m x^m f_m, f_m = (d/dx)^m T / m! at explicit x = 0."""
    parts, d = [], T
    for m in range(max_degree + 1):
        if d == ZERO:
            return parts
        parts.append((m, mul(Num(Fraction(1, math.factorial(m))), subs(d, {S.x: ZERO}))))
        d = partial(d, S.x)
    raise ModelError("density must be polynomial in x (degree <= 8)")


def _moment(f: np.ndarray, m: int, period: float) -> float:
    """int_0^P x^m f(x) dx for periodic samples f, exact for the trig interpolant.

    I_m(k) = P^m/(ik) - m/(ik) I_(m-1)(k) for k != 0 and I_m(0) = P^(m+1)/(m+1).
    """
    N = len(f)
    c = np.fft.fft(f) / N
    k = 2 * np.pi / period * np.fft.fftfreq(N, 1.0 / N)
    c[N // 2] = 0.5 * c[N // 2]  # split the Nyquist mode evenly between +-k
    ks = np.concatenate([k, [-k[N // 2]]])
    cs = np.concatenate([c, [c[N // 2]]])
    nz = ks != 0
    I = np.where(nz, 0.0, period).astype(complex)
    for j in range(1, m + 1):
        I_nz = period ** j / (1j * ks[nz]) - j / (1j * ks[nz]) * I[nz]
        I = I.copy()
        I[nz] = I_nz
        I[~nz] = period ** (j + 1) / (j + 1)
    if m == 0:
        I[nz] = 0.0
    return float(np.real(np.sum(cs * I)))


class _Functional:
    """int_0^P T dx for a density T(t, x, u, u_x, ...)."""

    def __init__(self, label: str, T: Expr, eq: GardnerEquation, grid: Grid,
                 X: Expr | None = None):
        T = on_shell_reduce(T, eq) if any(s.jet[1] for s in jet_symbols(T, "u")) else T
        unbound = sorted(s.name for s in free_symbols(T)
                         if s.kind in ("constant", "function"))
        if unbound:
            raise ModelError(f"law {label!r}: bind {', '.join(unbound)} before simulating")
        self.label, self.T, self.X, self.grid, self.eq = label, T, X, grid, eq
        self.orders = sorted({s.jet[2] for s in jet_symbols(T, "u")} | {0})
        self.parts = _x_polynomial(T) if depends_on(T, "x") else []
        # explicit x breaks periodicity of T: track the boundary flux X(P) - X(0)
        self.boundary = X is not None and depends_on(T, "x")
        if self.boundary:
            self.X_orders = sorted({s.jet[2] for s in jet_symbols(X, "u")} | {0})

    def _env(self, t: float, u: np.ndarray, orders, x) -> dict:
        env = {"t": np.full_like(np.atleast_1d(x), t, dtype=float), "x": x}
        for j in orders:
            d = self.grid.derivative(u, j)
            env[S.jet("u", 0, j).name] = d if np.ndim(x) else d[0]
        return env

    def __call__(self, t: float, u: np.ndarray) -> float:
        env = self._env(t, u, self.orders, self.grid.x)
        if not self.parts:
            return self.grid.integrate(np.broadcast_to(evaluate(self.T, env), u.shape))
        # T = sum_m x^m f_m with f_m periodic: integrate each against x^m exactly
        env["x"] = np.zeros_like(self.grid.x)
        return sum(_moment(np.broadcast_to(evaluate(f, env), u.shape), m, self.grid.period)
                   for m, f in self.parts)

    def boundary_rate(self, t: float, u: np.ndarray) -> float:
        """X(P) - X(0) at the current state; u and its derivatives are periodic."""
        vals = []
        for xb in (self.grid.period, 0.0):
            env = self._env(t, u, self.X_orders, np.array([xb]))
            for j in self.X_orders:
                env[S.jet("u", 0, j).name] = np.array([self.grid.derivative(u, j)[0]])
            vals.append(float(np.asarray(evaluate(self.X, env)).ravel()[0]))
        return vals[0] - vals[1]


@dataclass
class SimulationResult:
    times: np.ndarray
    functionals: dict[str, np.ndarray]
    drift: dict[str, float]
    fields: list[np.ndarray] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    failed: bool = False
    message: str = ""

    def relative_drift(self, label: str) -> np.ndarray:
        f = self.functionals[label]
        return np.abs(f - f[0]) / max(abs(f[0]), 1e-300)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        labels = list(self.functionals)
        w.writerow(["t", *labels, *[f"drift[{lab}]" for lab in labels]])
        drifts = [self.relative_drift(lab) for lab in labels]
        for i, t in enumerate(self.times):
            w.writerow([f"{t:.12g}", *[f"{self.functionals[lab][i]:.16e}" for lab in labels],
                        *[f"{d[i]:.6e}" for d in drifts]])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"t_final": float(self.times[-1]), "drift": dict(self.drift),
                "failed": self.failed, "message": self.message,
                "diagnostics": self.diagnostics}


def simulate(eq: GardnerEquation, u0, config: SolverConfig = SolverConfig(),
             laws: Sequence = (), probes: Mapping[str, Expr] | None = None) -> SimulationResult:
    """Integrate to ``config.t_final`` recording int T dx for laws and probes.

    ``laws`` are certified ConservedVectors (a list, labelled by provenance,
    or a mapping label -> vector); ``probes`` are plain densities
    (for negative controls).  Drift is max_t |I(t) - I(0)| / |I(0)|.  For a
    density with explicit x the boundary flux is integrated alongside with the
    RK4 weights and added back, so the reported functional is the
    conserved combination int_0^P T dx + int_0^t [X]_0^P dt.
    """
    grid = config.grid
    u = np.asarray(u0(grid) if callable(u0) else u0, dtype=float)
    if u.shape != (grid.N,):
        raise ModelError(f"initial data must have {grid.N} points")
    if eq.fractional and np.any(u <= 0):
        raise SimulationError("fractional n needs positive initial data", 0.0)
    mons: list[_Functional] = []
    named = laws.items() if isinstance(laws, Mapping) else [(cv.provenance, cv) for cv in laws]
    seen: dict[str, int] = {}
    for label, cv in named:
        if not cv.certified:
            raise ModelError(f"law {label} is not certified")
        seen[label] = seen.get(label, 0) + 1
        if seen[label] > 1:
            label = f"{label}#{seen[label]}"
        mons.append(_Functional(label, cv.T, eq, grid, cv.X))
    for label, T in (probes or {}).items():
        mons.append(_Functional(label, T, eq, grid))
    labels = [m.label for m in mons]
    if len(set(labels)) != len(labels):
        raise ModelError("law and probe labels must be unique")
    rates = [m.boundary_rate for m in mons if m.boundary]
    rhs = _Rhs(eq, grid, config.linear_only)

    steps = int(round(config.t_final / config.dt))
    if steps < 1 or abs(steps * config.dt - config.t_final) > 1e-9 * max(1.0, config.t_final):
        raise ModelError("t_final must be a whole number of steps")
    every = max(1, steps // max(1, config.outputs))
    state = SimState(0.0, u, np.zeros(len(rates)))

    def record(s: SimState):
        times.append(s.t)
        j = 0
        for m in mons:
            val = m(s.t, s.u)
            if m.boundary:
                val += s.acc[j]
                j += 1
            series[m.label].append(val)
        if config.keep_fields:
            fields.append(s.u.copy())

    times: list[float] = []
    series: dict[str, list[float]] = {m.label: [] for m in mons}
    fields: list[np.ndarray] = []
    record(state)
    failed, message = False, ""
    for i in range(1, steps + 1):
        try:
            state = step(state, eq, config.dt, grid, rates, config.linear_only, rhs)
        except SimulationError as err:
            failed, message = True, str(err)
            break
        state.t = i * config.dt  # avoid accumulating round-off in t
        if i % every == 0 or i == steps:
            record(state)
    funcs = {k: np.array(v) for k, v in series.items()}
    drift = {}
    for k, f in funcs.items():
        drift[k] = float(np.max(np.abs(f - f[0])) / max(abs(f[0]), 1e-300))
    diagnostics = {"steps": i if failed else steps, "dt": config.dt, "N": grid.N,
                   "min_u": float(state.u.min()), "max_u": float(state.u.max()),
                   "boundary_corrected": [m.label for m in mons if m.boundary]}
    return SimulationResult(np.array(times), funcs, drift, fields, diagnostics, failed, message)


# ---------------------------------------------------------------------------
# reference solutions and convergence


def linear_exact(u0: np.ndarray, grid: Grid, t: float, q: float = 0.0) -> np.ndarray:
    """u_t + u_xxx + q u = 0 solved exactly in transform space."""
    k = grid.k
    return np.exp(-q * t) * np.fft.irfft(np.exp(1j * k ** 3 * t) * np.fft.rfft(u0), n=grid.N)


def self_convergence_order(eq: GardnerEquation, u0, config: SolverConfig) -> float:
    """log2 of the Richardson ratio |u_h - u_h/2| / |u_h/2 - u_h/4|."""
    finals = []
    for div in (1, 2, 4):
        cfg = replace(config, dt=config.dt / div, keep_fields=True, outputs=1)
        res = simulate(eq, u0, cfg)
        if res.failed:
            raise SimulationError(res.message)
        finals.append(res.fields[-1])
    e1 = np.max(np.abs(finals[0] - finals[1]))
    e2 = np.max(np.abs(finals[1] - finals[2]))
    return float(math.log2(e1 / e2))

