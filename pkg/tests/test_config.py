"""Run configuration: schema validation and construction."""

import json
from fractions import Fraction

import pytest

from vcgardner.config import ConfigError, equation_from_block, load_config, parse_value
from vcgardner.expr import Num
from vcgardner.parser import parse


def test_minimal_document():
    cfg = load_config({"schema": 1})
    assert cfg.seed == 0 and cfg.equation is None and cfg.case is None
    with pytest.raises(ConfigError):
        cfg.require_equation()


@pytest.mark.parametrize("doc, where", [
    ({}, "<root>"),
    ({"schema": 2}, "schema"),
    ({"schema": 1, "bogus": 1}, "<root>"),
    ({"schema": 1, "solver": {"N": 32}}, "solver/N"),
    ({"schema": 1, "case": {"id": "case9"}}, "case/id"),
    ({"schema": 1, "claws": {"laws": [{"catalog": "case1", "extra": 1}]}}, "claws/laws/0"),
])
def test_schema_rejections_name_the_location(doc, where):
    with pytest.raises(ConfigError) as err:
        load_config(doc)
    assert f"at {where}" in str(err.value)


def test_values_stay_exact():
    assert parse_value(0.5) == Num(Fraction(1, 2))
    assert parse_value("1/3") == Num(Fraction(1, 3))
    assert parse_value(2) == Num(2)
    with pytest.raises(ConfigError):
        parse_value(True)
    with pytest.raises(ConfigError):
        parse_value("u +")


def test_equation_block_defaults_and_antiderivatives():
    eq = equation_from_block({"A": "t", "Q": "1/(1 + t^4)", "antiderivatives": {"Q": "t"},
                              "n": "1/2", "t_domain": [0.0, 1.0]})
    assert eq.is_canonical and eq.n == parse("1/2") and eq.t_domain == (0.0, 1.0)
    assert eq.Q.antiderivative == parse("t")


def test_overrides_and_sampling(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"schema": 1, "seed": 3, "tol": 1e-8,
                                "sampling": {"count": 7}, "equation": {"A": 1}}))
    cfg = load_config(path, seed=9, tol=1e-6)
    assert cfg.seed == 9 and cfg.sampling.seed == 9
    assert cfg.tol == 1e-6 and cfg.sampling.tolerance == 1e-6
    assert cfg.sampling.count == 7


def test_case_block_and_model_errors():
    cfg = load_config({"schema": 1, "case": {"id": "case1", "params": {"n": 2, "a": 1, "b": 3,
                                                                       "c": 0, "d": 1}}})
    assert cfg.require_equation().n == Num(2)
    with pytest.raises(ConfigError):
        load_config({"schema": 1, "equation": {"n": -1}})


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        load_config(bad)


@pytest.mark.parametrize("name", ["case1_symmetry", "case1_claws", "case3_claws",
                                  "vaneeva_transform", "adjoint_nhalf", "simulate_q1"])
def test_shipped_configs_validate(name):
    load_config(f"configs/{name}.json")
