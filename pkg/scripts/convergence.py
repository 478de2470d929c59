#!/usr/bin/env python3
"""Temporal order of the solver and its error against the exact linear flow."""

import argparse

import numpy as np

from vcgardner.model import canonical
from vcgardner.parser import parse
from vcgardner.sim import InitialProfile, SolverConfig, linear_exact, self_convergence_order, simulate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=128)
    ap.add_argument("--t-final", type=float, default=0.5)
    args = ap.parse_args()
    u0 = InitialProfile(0.0, ((1, 0.1, 0.0), (2, 0.05, 0.3)))
    for A, n in (("0", "1"), ("1", "1"), ("1", "2")):
        eq = canonical(A=parse(A), n=parse(n))
        for dt in (0.05, 0.025):
            cfg = SolverConfig(N=args.N, t_final=args.t_final, dt=dt)
            order = self_convergence_order(eq, u0, cfg)
            print(f"A={A} n={n} dt={dt:g}: observed order {order:.2f}")
    for q in (0.0, 1.5):
        print(f"linear flow, Q={q:g}:")
        for dt in (0.02, 0.01, 0.005):
            cfg = SolverConfig(N=args.N, t_final=args.t_final, dt=dt, outputs=1,
                               linear_only=True, keep_fields=True)
            res = simulate(canonical(Q=q), u0, cfg)
            err = np.max(np.abs(res.fields[-1] - linear_exact(u0(cfg.grid), cfg.grid,
                                                             args.t_final, q)))
            print(f"  dt={dt:g}: max error {err:.2e}")


if __name__ == "__main__":
    main()
