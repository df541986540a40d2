import math

import numpy as np
import pytest

from qkdv import config
from qkdv.errors import ConfigError


def test_defaults_resolve_for_every_command():
    for command in config.COMMANDS:
        cfg = config.resolve(command, {})
        assert cfg["version"] == config.SCHEMA_VERSION
        assert config.resolve(command, cfg) == cfg  # resolved configs are fixed points


def test_command_overrides():
    cfg = config.resolve("bench-soliton")
    assert cfg["problem"]["period"] == 40.0 and cfg["solver"]["n"] == 512
    assert config.resolve("sweep-epsilon")["problem"]["period"] == pytest.approx(8 * math.pi)


@pytest.mark.parametrize("raw", [
    {"bogus": {}},
    {"solver": {"nn": 3}},
    {"solver": {"n": "big"}},
    {"solver": {"n": 2.5}},
    {"solver": {"dt": -1.0}},
    {"solver": {"integrator": "euler"}},
    {"problem": {"J": [1.0]}},
    {"problem": {"p": [0.0, 1.0]}},
    {"version": 2},
    {"solver": 3},
])
def test_invalid_configs(raw):
    with pytest.raises(ConfigError):
        config.resolve("solve", raw)


@pytest.mark.parametrize("k", [0, 9])
def test_gauge_order_bounds(k):
    with pytest.raises(ConfigError):
        config.resolve("verify-gauge", {"gauge": {"k": k}})


def test_integer_given_for_float():
    assert config.resolve("solve", {"solver": {"T": 2}})["solver"]["T"] == 2.0


def test_load_file_and_overrides(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('version = 1\n[solver]\nn = 128\n[initial]\nkind = "soliton"\n')
    cfg = config.load(path, "solve", ["solver.dt=5e-4", 'problem.nonlinearity="power:2"', "initial.c=0.5"])
    assert cfg["solver"]["n"] == 128 and cfg["solver"]["dt"] == 5e-4
    assert cfg["problem"]["nonlinearity"] == "power:2" and cfg["initial"]["c"] == 0.5


@pytest.mark.parametrize("bad", ["solver.n", "n=3"])
def test_malformed_override(bad):
    with pytest.raises(ConfigError):
        config.load(None, "solve", [bad])


def test_missing_or_broken_file(tmp_path):
    with pytest.raises(ConfigError):
        config.load(tmp_path / "absent.toml", "solve")
    broken = tmp_path / "broken.toml"
    broken.write_text("[solver\n")
    with pytest.raises(ConfigError):
        config.load(broken, "solve")


def test_integrable_J_is_filled_in():
    cfg = config.resolve("bench-integrable")
    lo, hi = cfg["integrable"]["J"]
    assert -2.0 < lo < hi


@pytest.mark.parametrize("kind", ["cos", "soliton", "bump", "rough", "random", "constant", "zero"])
def test_build_initial_kinds(kind):
    cfg = config.resolve("solve", {"initial": {"kind": kind}})
    v = config.build_initial(cfg, 64, 40.0 if kind == "soliton" else 2 * math.pi)
    assert v.n == 64 and np.all(np.isfinite(v.values))


def test_build_unknown_kind():
    cfg = config.resolve("solve", {"initial": {"kind": "square"}})
    with pytest.raises(ConfigError):
        config.build_initial(cfg, 64, 1.0)


def test_build_problem_from_coefficients():
    cfg = config.resolve("solve", {"problem": {"p": [0, 0, 0.5], "kappa": [1, 0, 1], "J": [-2, 2]}})
    prob = config.build_problem(cfg)
    assert prob.kappa(np.array([1.0]))[0] == pytest.approx(2.0)
