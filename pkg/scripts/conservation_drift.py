#!/usr/bin/env python3
"""Drift of the weighted mass and energy against dt, written as CSV.

Both densities come from the general multiplier (e^H u and e^(2H) u^2);
u^3 is carried along as a quantity that is not conserved.
"""

import argparse
import csv
import sys

from vcgardner.conservation import paper_catalog
from vcgardner.model import canonical
from vcgardner.parser import parse
from vcgardner.sim import InitialProfile, SolverConfig, simulate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=256)
    ap.add_argument("--t-final", type=float, default=1.0)
    ap.add_argument("--A", default="1")
    ap.add_argument("--n", default="1")
    ap.add_argument("--q", action="append", help="Q(t) values (repeatable; default 0 and 1)")
    ap.add_argument("--dt", type=float, nargs="+", default=[8e-3, 4e-3, 2e-3, 1e-3, 5e-4])
    args = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["Q", "dt", "drift_mass", "drift_energy", "drift_u3", "failed"])
    for q in args.q or ["0", "1"]:
        eq = canonical(A=parse(args.A), Q=parse(q), n=parse(args.n), t_domain=(0.0, args.t_final))
        laws = {
            "mass": paper_catalog("multiplier_general", eq, constants={"ct1": 0, "ct2": 1}),
            "energy": paper_catalog("multiplier_general", eq, constants={"ct1": 2, "ct2": 0}),
        }
        for dt in args.dt:
            cfg = SolverConfig(N=args.N, t_final=args.t_final, dt=dt, outputs=20)
            res = simulate(eq, InitialProfile(), cfg, laws, {"u3": parse("u^3")})
            w.writerow([q, dt, f"{res.drift['mass']:.3e}", f"{res.drift['energy']:.3e}",
                        f"{res.drift['u3']:.3e}", res.failed])


if __name__ == "__main__":
    main()
