"""Run configuration: a versioned JSON document validated before any work."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from .expr import Expr, as_expr
from .jets import SamplingSpec
from .model import CoefficientFn, GardnerEquation, ModelError
from .parser import parse
from .sim import InitialProfile, SolverConfig
from .symmetries import SymmetryCase

__all__ = ["ConfigError", "RunConfig", "SCHEMA", "load_config", "parse_value",
           "equation_from_block"]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


_EXPR = {"type": ["string", "number"]}
_RANGE = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_CONSTANTS = {"type": "object", "additionalProperties": _EXPR}
_LAW = {
    "oneOf": [
        {"type": "string"},
        {"type": "object", "additionalProperties": False, "required": ["catalog"],
         "properties": {"catalog": {"type": "string"}, "label": {"type": "string"},
                        "constants": _CONSTANTS, "amended": {"type": "boolean"}}},
        {"type": "object", "additionalProperties": False, "required": ["multiplier"],
         "properties": {"multiplier": {"enum": ["general", "nhalf"]},
                        "label": {"type": "string"}, "constants": _CONSTANTS}},
        {"type": "object", "additionalProperties": False, "required": ["T", "X"],
         "properties": {"T": _EXPR, "X": _EXPR, "label": {"type": "string"},
                        "constants": _CONSTANTS}},
    ]
}

SCHEMA: dict = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "seed": {"type": "integer", "minimum": 0},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "equation": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "A": _EXPR, "B": _EXPR, "C": _EXPR, "Q": _EXPR, "n": _EXPR,
                "t_domain": _RANGE,
                "antiderivatives": {
                    "type": "object", "additionalProperties": False,
                    "properties": {k: _EXPR for k in "ABCQ"},
                },
            },
        },
        "case": {
            "type": "object", "additionalProperties": False, "required": ["id"],
            "properties": {"id": {"enum": ["arbitrary", "case1", "case2", "case3"]},
                           "params": _CONSTANTS, "t_domain": _RANGE},
        },
        "sampling": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "count": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "t_range": _RANGE, "x_range": _RANGE, "u_range": _RANGE,
                "deriv_range": _RANGE, "v_range": _RANGE, "function_range": _RANGE,
                "constant_range": _RANGE, "positive_u": {"type": "boolean"},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "transform": {
            "type": "object", "additionalProperties": False,
            "properties": {"eps1": {"type": "number"}, "eps2": {"type": "number"},
                           "samples": {"type": "integer", "minimum": 2}},
        },
        "adjoint": {
            "type": "object", "additionalProperties": False,
            "properties": {"branch": {"enum": ["general", "n_half_A_zero"]},
                           "constants": _CONSTANTS},
        },
        "claws": {
            "type": "object", "additionalProperties": False,
            "properties": {"laws": {"type": "array", "items": _LAW},
                           "constants": _CONSTANTS},
        },
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {"N": {"type": "integer", "minimum": 64},
                           "period": {"type": "number", "exclusiveMinimum": 0},
                           "t_final": {"type": "number", "exclusiveMinimum": 0},
                           "dt": {"type": "number", "exclusiveMinimum": 0},
                           "outputs": {"type": "integer", "minimum": 1},
                           "linear_only": {"type": "boolean"}},
        },
        "initial": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "mean": {"type": "number"},
                "modes": {"type": "array",
                          "items": {"type": "array", "items": {"type": "number"},
                                    "minItems": 3, "maxItems": 3}},
            },
        },
        "simulate": {
            "type": "object", "additionalProperties": False,
            "properties": {"laws": {"type": "array", "items": _LAW},
                           "probes": {"type": "object", "additionalProperties": _EXPR},
                           "max_drift": {"type": "number", "exclusiveMinimum": 0}},
        },
    },
}


def parse_value(value) -> Expr:
    """Numbers stay exact where possible ("1/2", 0.5 -> 1/2); strings are parsed."""
    if isinstance(value, bool):
        raise ConfigError("booleans are not expressions")
    if isinstance(value, int):
        return as_expr(value)
    if isinstance(value, float):
        return as_expr(Fraction(str(value)))
    try:
        return parse(str(value))
    except Exception as err:  # ParseError or UnknownSymbolError
        raise ConfigError(f"cannot parse {value!r}: {err}") from err


def equation_from_block(block: Mapping) -> GardnerEquation:
    anti = block.get("antiderivatives", {})
    coeffs = {}
    defaults = {"A": 0, "B": 1, "C": 1, "Q": 0}
    for name in "ABCQ":
        expr = parse_value(block.get(name, defaults[name]))
        coeffs[name] = CoefficientFn(expr, parse_value(anti[name]) if name in anti else None)
    n = parse_value(block.get("n", 1))
    kw = {"t_domain": tuple(block["t_domain"])} if "t_domain" in block else {}
    return GardnerEquation(coeffs["A"], coeffs["B"], coeffs["C"], coeffs["Q"], n, **kw)


@dataclass
class RunConfig:
    raw: dict
    seed: int = 0
    tol: float | None = None
    equation: GardnerEquation | None = None
    case: SymmetryCase | None = None
    sampling: SamplingSpec = field(default_factory=SamplingSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    initial: InitialProfile = field(default_factory=InitialProfile)

    def block(self, name: str) -> dict:
        return dict(self.raw.get(name, {}))

    def require_equation(self) -> GardnerEquation:
        if self.equation is not None:
            return self.equation
        if self.case is not None:
            return self.case.equation()
        raise ConfigError("this command needs an 'equation' or a 'case' block")

    def constants(self, extra: Mapping | None = None) -> dict[str, Expr]:
        out = {k: parse_value(v) for k, v in self.block("claws").get("constants", {}).items()}
        out.update({k: parse_value(v) for k, v in (extra or {}).items()})
        return out


def load_config(source: str | Path | Mapping, seed: int | None = None,
                tol: float | None = None) -> RunConfig:
    """Validate and build; command-line seed/tol override the document."""
    if isinstance(source, Mapping):
        raw = dict(source)
    else:
        try:
            raw = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"cannot read config {source}: {err}") from err
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as err:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {err.message}") from err
    seed = int(raw.get("seed", 0)) if seed is None else int(seed)
    tol = raw.get("tol") if tol is None else float(tol)
    try:
        eq = equation_from_block(raw["equation"]) if "equation" in raw else None
        case = None
        if "case" in raw:
            c = raw["case"]
            params: dict[str, Any] = {k: parse_value(v) for k, v in c.get("params", {}).items()}
            kw = {"t_domain": tuple(c["t_domain"])} if "t_domain" in c else {}
            case = SymmetryCase(c["id"], params, **kw)
        samp = dict(raw.get("sampling", {}))
        samp["seed"] = seed
        if tol is not None:
            samp["tolerance"] = tol
        sampling = SamplingSpec.from_dict(samp)
        solver = SolverConfig.from_dict(raw.get("solver", {}))
        initial = InitialProfile.from_dict(raw["initial"]) if "initial" in raw else InitialProfile()
    except ModelError as err:
        raise ConfigError(str(err)) from err
    return RunConfig(raw, seed, tol, eq, case, sampling, solver, initial)
