"""Command-line entry point.

    vcgardner <command> --config run.json [--seed N] [--tol T] [--out PATH] [--format json|csv]

Exit status: 0 when every requested verdict holds, 1 on a verification
failure, 2 on configuration errors.  Reports contain no timestamps, so the
same config and seed always produce the same bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from . import symbols as S
from .adjoint import (
    adjoint_equation, printed_adjoint, self_adjointness_residual, theorem3_substitution,
)
from .config import ConfigError, RunConfig, load_config, parse_value
from .conservation import (
    CATALOG_IDS, CertificationError, ConservedVector, multiplier_general,
    multiplier_nhalf, multiplier_vector, paper_catalog,
)
from .equivalence import pushforward_verdict, to_canonical
from .expr import Expr, add, mul
from .jets import IdentityVerdict, check_identity
from .model import ModelError, build_aux, coefficient_values, spec_for, substitute_aux
from .parser import ParseError
from .sim import simulate
from .symmetries import (
    SymmetryCase, classify, determining_residuals, generators_for, invariance_residual,
)

COMMANDS = ("classify", "transform", "check-symmetry", "check-adjoint", "check-claw",
            "list-claws", "simulate")
CASE_ENTRIES = {"case1": "case1", "case2": "case2", "case2_dhalf": "case2", "case3": "case3"}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Expr):
        return obj.text
    if isinstance(obj, Fraction):
        return str(obj) if obj.denominator != 1 else obj.numerator
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def _verdict(v: IdentityVerdict) -> dict:
    return v.to_dict()


# ---------------------------------------------------------------------------
# commands; each returns (report, ok)


def cmd_classify(cfg: RunConfig):
    eq = cfg.require_equation()
    cls = classify(eq)
    return {"equation": eq.to_dict(), "classification": cls.to_dict()}, True


def cmd_transform(cfg: RunConfig):
    eq = cfg.require_equation()
    tb = cfg.block("transform")
    tr = to_canonical(eq, float(tb.get("eps1", 0.0)), float(tb.get("eps2", 0.0)))
    t0, t1 = tr.eq_tilde.t_domain
    grid = np.linspace(t0, t1, int(tb.get("samples", 11)))
    vals = coefficient_values(tr.eq_tilde, grid)
    verdict = pushforward_verdict(tr, cfg.sampling, cfg.tol or 1e-9)
    report = {
        "source": eq.to_dict(),
        "canonical": tr.eq_tilde.to_dict(),
        "maps": tr.maps_text(),
        "samples": [{"t_tilde": float(t), "A_tilde": float(a), "Q_tilde": float(q)}
                    for t, a, q in zip(grid, vals["A"], vals["Q"])],
        "pushforward": _verdict(verdict),
    }
    return report, bool(verdict.holds)


def _case_for(cfg: RunConfig) -> SymmetryCase:
    if cfg.case is not None:
        return cfg.case
    eq = cfg.require_equation()
    cls = classify(eq)
    if cls.case_id == "arbitrary":
        return SymmetryCase("arbitrary", {"A": eq.coefficient("A"), "Q": eq.coefficient("Q"),
                                          "n": eq.n}, eq.t_domain)
    return SymmetryCase(cls.case_id, cls.params, eq.t_domain)


def cmd_check_symmetry(cfg: RunConfig):
    case = _case_for(cfg)
    eq = case.equation()
    spec = spec_for(eq, cfg.sampling)
    tol = cfg.tol or 1e-9
    ok = True
    gens = []
    for gen in generators_for(case):
        rows = [check_identity(r, spec=spec, tol=tol, arbitrary=True)
                for r in determining_residuals(gen, eq)]
        inv = check_identity(invariance_residual(gen, eq), spec=spec, tol=tol, arbitrary=True)
        ok &= all(r.holds for r in rows) and inv.holds
        gens.append({"generator": gen.to_dict(),
                     "determining": [_verdict(r) for r in rows],
                     "invariance": _verdict(inv)})
    return {"case": case.to_dict(), "equation": eq.to_dict(), "generators": gens}, bool(ok)


def cmd_check_adjoint(cfg: RunConfig):
    eq = cfg.require_equation()
    eq.require_canonical("check-adjoint")
    spec = spec_for(eq, cfg.sampling)
    adj = adjoint_equation(eq)
    match = check_identity(_minus(adj, printed_adjoint(eq)), spec=spec,
                           tol=cfg.tol or 1e-12, arbitrary=True)
    ab = cfg.block("adjoint")
    consts = {k: parse_value(v) for k, v in ab.get("constants", {}).items()}
    sub = theorem3_substitution(eq, ab.get("branch", "general"), build_aux(eq),
                                consts.get("c1", S.c1), consts.get("c2", S.c2),
                                consts.get("c3", S.c3))
    aux = build_aux(eq)
    sa = check_identity(self_adjointness_residual(eq, sub), spec=spec,
                        tol=cfg.tol or (1e-7 if aux.numeric() else 1e-9), arbitrary=True)
    report = {"equation": eq.to_dict(), "adjoint": adj.text,
              "adjoint_matches_closed_form": _verdict(match),
              "substitution": sub.to_dict(), "self_adjointness": _verdict(sa)}
    return report, bool(match.holds and sa.holds)


def _minus(a: Expr, b: Expr) -> Expr:
    return add(a, mul(-1, b))


def _law_item(item) -> dict:
    return {"catalog": item} if isinstance(item, str) else dict(item)


def build_law(item, cfg: RunConfig, certify_it: bool = True,
              extra_constants: dict | None = None) -> tuple[str, ConservedVector]:
    """One law from its config entry; raises CertificationError when it fails."""
    item = _law_item(item)
    consts = cfg.constants(extra_constants)
    consts.update({k: parse_value(v) for k, v in item.get("constants", {}).items()})
    if "catalog" in item:
        cid = item["catalog"]
        label = item.get("label", cid)
        if cid in CASE_ENTRIES:
            case = cfg.case
            if case is None or case.case_id != CASE_ENTRIES[cid]:
                raise ConfigError(f"catalog entry {cid} needs a '{CASE_ENTRIES[cid]}' case block")
            params = dict(case.params)
            params["t_domain"] = case.t_domain
            cv = paper_catalog(cid, None, params, consts or None, certify_it,
                               cfg.sampling, cfg.tol, item.get("amended", False))
        elif cid in CATALOG_IDS:
            cv = paper_catalog(cid, cfg.require_equation(), None, consts or None, certify_it,
                               cfg.sampling, cfg.tol)
        else:
            raise ConfigError(f"unknown catalog entry {cid!r}")
        return label, cv
    eq = cfg.require_equation()
    aux = build_aux(eq)
    if "multiplier" in item:
        kind = item["multiplier"]
        if kind == "general":
            m = multiplier_general(aux, consts.get("ct1", S.ct1), consts.get("ct2", S.ct2))
        else:
            m = multiplier_nhalf(aux, consts.get("ct3", S.ct3))
        return item.get("label", f"multiplier_{kind}"), multiplier_vector(m, eq, certify_it,
                                                                          cfg.sampling, cfg.tol)
    from .conservation import _bind_constants, _finish

    T, X = (substitute_aux(_bind_constants(parse_value(item[k]), consts), aux) for k in "TX")
    label = item.get("label", "custom")
    return label, _finish(ConservedVector(T, X, f"custom({label})"), eq, certify_it,
                          cfg.sampling, cfg.tol)


def cmd_check_claw(cfg: RunConfig):
    laws = cfg.block("claws").get("laws", ["multiplier_general"])
    out, ok = [], True
    for item in laws:
        try:
            label, cv = build_law(item, cfg)
            out.append({"law": label, "holds": True, **cv.to_dict()})
        except CertificationError as err:
            ok = False
            v = err.verdict
            rec = {"law": _law_item(item).get("label", _law_item(item).get("catalog", "custom")),
                   "holds": False, "error": str(err), "report": err.report}
            if err.vector is not None:
                rec.update({"T": err.vector.T.text, "X": err.vector.X.text})
            if v is not None:
                rec["verdict"] = v.to_dict()
                if v.worst_point is not None:
                    rec["worst_point"] = v.worst_point.to_dict()
            out.append(rec)
    return {"laws": out}, ok


def cmd_list_claws(cfg: RunConfig):
    entries = []
    for cid in CATALOG_IDS:
        try:
            _, cv = build_law(cid, cfg, certify_it=False)
            entries.append({"id": cid, "applicable": True, "T": cv.T.text, "X": cv.X.text})
        except (ConfigError, ModelError) as err:
            entries.append({"id": cid, "applicable": False, "reason": str(err)})
    return {"catalog": entries}, True


_DEFAULT_SIM_LAWS = [
    {"multiplier": "general", "label": "mass", "constants": {"ct1": 0, "ct2": 1}},
    {"multiplier": "general", "label": "energy", "constants": {"ct1": 2, "ct2": 0}},
]


def cmd_simulate(cfg: RunConfig):
    eq = cfg.require_equation()
    sb = cfg.block("simulate")
    laws = dict(build_law(item, cfg) for item in sb.get("laws", _DEFAULT_SIM_LAWS))
    probes = {k: parse_value(v) for k, v in sb.get("probes", {}).items()}
    res = simulate(eq, cfg.initial, cfg.solver, laws, probes)
    limit = sb.get("max_drift")
    ok = not res.failed and (limit is None or all(res.drift[k] <= limit for k in laws))
    report = {"manifest": {"config": cfg.raw, "seed": cfg.seed},
              "equation": eq.to_dict(), "laws": {k: cv.to_dict() for k, cv in laws.items()},
              "result": res.summary()}
    return report, bool(ok), res


HANDLERS: dict[str, Callable] = {
    "classify": cmd_classify, "transform": cmd_transform,
    "check-symmetry": cmd_check_symmetry, "check-adjoint": cmd_check_adjoint,
    "check-claw": cmd_check_claw, "list-claws": cmd_list_claws, "simulate": cmd_simulate,
}


def run(command: str, cfg: RunConfig, fmt: str = "json") -> tuple[int, str]:
    """Execute one command; returns (exit status, rendered report)."""
    out = HANDLERS[command](cfg)
    report, ok = out[0], out[1]
    if fmt == "csv":
        if command != "simulate":
            raise ConfigError("--format csv is only available for simulate")
        text = out[2].to_csv()
    else:
        report = {"command": command, "ok": ok, **report}
        text = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    return (0 if ok else 1), text


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vcgardner", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--tol", type=float, default=None, help="override the tolerance")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.seed, args.tol)
        status, text = run(args.command, cfg, args.format)
    except CertificationError as err:
        print(f"verification failed: {err}", file=sys.stderr)
        return 1
    except (ConfigError, ParseError, ModelError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
