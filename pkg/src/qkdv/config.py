"""Run configuration: TOML files resolved against per-command defaults.

Schema (version 1).  Every section is optional; omitted keys take the
command's default and the fully resolved dictionary is what the run
manifest stores.

    version = 1

    [problem]           # nonlinearity = "kdv" | "mkdv" | "power:m" | "linear:c,kappa0" | "integrable:a,eps"
    nonlinearity = "kdv"
    p = [0.0, 0.0, 0.5]        # optional ascending coefficients of p; needs kappa too
    kappa = [1.0, 0.0, 1.0]    # optional ascending coefficients of kappa
    period = 6.283185307179586
    J = [-3.0, 5.0]
    k_max = 8

    [solver]            # fields of SolverConfig
    n = 256
    dt = 1e-3
    T = 1.0
    ...

    [initial]           # kind = soliton | bump | cos | rough | random | constant | zero
    kind = "cos"
    amplitude = 0.5

    [sweep]        eps = [0.4, 0.2, 0.1, 0.05]; q = 4
    [continuity]   perturbations = [...]; s = 4; eps_reg = 0.0; tolerance = 10.0; K; direction_width
    [soliton]      c = 1.0; eps = [0.1, 0.05, 0.025]; shape_tol; mass_tol; hamiltonian_tol
    [integrable]   a = 2.0; eps = 1.0; amplitude = 0.1; period; J; refine; mass_tol; hamiltonian_tol
    [gauge]        k = 8
"""
from __future__ import annotations

import copy
import math
import sys
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .field import Field
from .initial import bump, random_bandlimited, rough_data, soliton
from .model import builtin_problem, polynomial_problem, validate_problem
from .solver import SolverConfig

SCHEMA_VERSION = 1
TWO_PI = 2 * math.pi

_SOLVER = SolverConfig().as_dict()

_INITIAL = {"kind": "cos", "amplitude": 0.5, "mode": 1, "mean": 0.0, "c": 1.0, "x0": None,
            "width": 0.1, "center": None, "q": 4.0, "seed": 0, "max_mode": None, "modes": 8,
            "w1": 1.0, "value": 0.0}

_PROBLEM = {"nonlinearity": "kdv", "p": None, "kappa": None, "period": TWO_PI, "J": [-3.0, 5.0], "k_max": 8}

SECTIONS = {
    "problem": _PROBLEM,
    "solver": _SOLVER,
    "initial": _INITIAL,
    "sweep": {"eps": [0.4, 0.2, 0.1, 0.05], "q": 4},
    "continuity": {"perturbations": [1e-1, 1e-2, 1e-3, 1e-4], "s": 4, "eps_reg": 0.0, "tolerance": 10.0,
                   "K": None, "direction_width": 0.5},
    "soliton": {"c": 1.0, "eps": [0.1, 0.05, 0.025], "shape_tol": 1e-6, "mass_tol": 1e-10,
                "hamiltonian_tol": 1e-6},
    "integrable": {"a": 2.0, "eps": 1.0, "amplitude": 0.1, "period": TWO_PI, "J": None, "refine": True,
                   "mass_tol": 1e-10, "hamiltonian_tol": 1e-5},
    "gauge": {"k": 8},
    "residual": {"trajectory": ""},
}

# sections each command reads, and the overrides that make its defaults a sensible experiment
COMMANDS = {
    "solve": (("problem", "solver", "initial"), {}),
    "sweep-epsilon": (("problem", "solver", "initial", "sweep"), {
        "problem": {"period": 8 * math.pi, "J": [-5.0, 5.0]},
        "solver": {"n": 512, "dt": 1e-3, "T": 0.5},
        "initial": {"kind": "rough", "q": 4.0, "amplitude": 1.0},
    }),
    "continuity": (("problem", "solver", "initial", "continuity"), {}),
    "bench-soliton": (("problem", "solver", "soliton"), {
        "problem": {"period": 40.0, "J": [-1.0, 4.0]},
        "solver": {"n": 512, "dt": 1e-4, "T": 1.0, "output_every": 100},
    }),
    "bench-integrable": (("solver", "integrable"), {
        "solver": {"n": 128, "dt": 1e-3, "T": 5.0, "output_every": 50},
    }),
    "verify-gauge": (("gauge",), {}),
    "residual": (("residual",), {}),
}


def _coerce(section: str, key: str, value, default):
    where = f"[{section}] {key}"
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be a boolean")
        return value
    if isinstance(default, int) and key not in ("T", "dt"):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise ConfigError(f"{where} must be an integer")
        return int(value)
    if isinstance(default, float) or key in ("T", "dt"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string")
        return value
    if isinstance(default, list) or default is None:
        if value is None:
            return None
        if isinstance(value, list):
            if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value):
                raise ConfigError(f"{where} must be a list of numbers")
            return [float(x) for x in value]
        if isinstance(value, (int, float)) and not isinstance(value, bool) and default is None:
            return value
        raise ConfigError(f"{where} has the wrong type")
    raise ConfigError(f"{where}: unsupported value")


def resolve(command: str, raw: dict | None = None) -> dict:
    """Merge ``raw`` over the defaults of ``command``; unknown keys are errors."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    raw = copy.deepcopy(raw or {})
    version = raw.pop("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config version {version!r} (expected {SCHEMA_VERSION})")
    sections, overrides = COMMANDS[command]
    for name in raw:
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
    out = {"version": SCHEMA_VERSION}
    for name in sections:
        defaults = {**SECTIONS[name], **overrides.get(name, {})}
        given = raw.get(name, {})
        if not isinstance(given, dict):
            raise ConfigError(f"[{name}] must be a table")
        unknown = set(given) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
        sec = dict(defaults)
        for key, value in given.items():
            sec[key] = _coerce(name, key, value, defaults[key])
        out[name] = sec
    _check(out)
    return out


def _check(cfg: dict) -> None:
    if "solver" in cfg:
        solver_config(cfg)
    prob = cfg.get("problem")
    if prob is not None:
        if (prob["p"] is None) != (prob["kappa"] is None):
            raise ConfigError("[problem] p and kappa must be given together")
        if len(prob["J"]) != 2:
            raise ConfigError("[problem] J must have two entries")
    integ = cfg.get("integrable")
    if integ is not None and integ["J"] is None:
        a = integ["a"]
        lo = -a + 0.25 * abs(a) if a > 0 else -a + 0.25 * abs(a) + 1e-3
        integ["J"] = [lo, lo + abs(a) + 10.0]
    if "gauge" in cfg and not 1 <= cfg["gauge"]["k"] <= 8:
        raise ConfigError("[gauge] k must lie in 1..8")


def load(path, command: str, overrides: list | None = None) -> dict:
    """Read a TOML file (or none) and apply ``section.key=value`` overrides."""
    raw: dict = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = tomllib.loads(path.read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    for item in overrides or []:
        key, sep, text = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        try:
            value = tomllib.loads(f"v = {text}")["v"]
        except tomllib.TOMLDecodeError:
            value = text
        raw.setdefault(section, {})[name] = value
    return resolve(command, raw)


# -- builders ---------------------------------------------------------------------
def solver_config(cfg: dict) -> SolverConfig:
    try:
        return SolverConfig(**cfg["solver"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[solver] {exc}") from None


def build_problem(cfg: dict):
    prob = cfg["problem"]
    if prob["p"] is not None:
        spec = polynomial_problem(prob["p"], prob["kappa"], prob["period"], prob["J"], prob["k_max"])
    else:
        spec = builtin_problem(prob["nonlinearity"], prob["period"], prob["J"], prob["k_max"])
    return validate_problem(spec)


def build_initial(cfg: dict, n: int, period: float) -> Field:
    ini = cfg["initial"]
    kind = ini["kind"]
    if kind == "soliton":
        return soliton(ini["c"], n, period, x0=ini["x0"])
    if kind == "bump":
        b = bump(n, period, width=ini["width"], center=ini["center"])
        return b.with_values(ini["mean"] + ini["amplitude"] * b.values)
    if kind == "cos":
        return Field.from_function(
            lambda x: ini["mean"] + ini["amplitude"] * np.cos(2 * np.pi * ini["mode"] * x / period), n, period)
    if kind == "rough":
        return rough_data(ini["q"], n, period, ini["amplitude"], ini["max_mode"], ini["seed"])
    if kind == "random":
        rng = np.random.default_rng(ini["seed"])
        return random_bandlimited(rng, n, period, ini["modes"], ini["w1"], ini["mean"])
    if kind == "constant":
        return Field.constant(ini["value"], n, period)
    if kind == "zero":
        return Field.constant(0.0, n, period)
    raise ConfigError(f"[initial] unknown kind {kind!r}")
