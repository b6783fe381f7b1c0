"""Experiment configuration: strict parsing, defaults and canonical JSON.

A configuration is a TOML (or JSON) document with the tables ``system``,
``perturbation``, ``integrator``, ``experiment`` and ``output``.  Unknown
keys are errors.  :func:`resolve` materializes every default, including the
concrete coupling/subsystem behind a preset name, so that the resolved
dictionary fully describes a run and round-trips through :func:`dumps`.
"""

from __future__ import annotations

import copy
import json
import math
import sys
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import catalogue
from .errors import ConfigError
from .integrators import METHODS, StepperConfig
from .model import Params, SystemSpec

__all__ = ["FORMAT_VERSION", "DEFAULTS", "load", "loads", "resolve", "dumps", "build_spec", "stepper", "header_lines",
           "shipped_configs"]

FORMAT_VERSION = "nonholo-artifact/1"

PRESET_PARTS = {
    "contact": {"coupling": "linear", "subsystem": "harmonic"},
    "cvt": {"coupling": "cvt", "subsystem": "harmonic"},
    "decoupled": {"coupling": "zero", "subsystem": "harmonic"},
}

DEFAULTS = {
    "system": {
        "preset": "contact",
        "coupling": None,
        "coupling_coeffs": None,
        "subsystem": None,
        "subsystem_coeffs": None,
        "params": {"m1": 1.0, "m2": 1.0, "k1": 1.0, "k2": 1.0},
    },
    "perturbation": {"name": "none", "epsilon": 0.0},
    "integrator": {
        "method": "implicit_midpoint",
        "h": 0.05,
        "newton_tol": 1e-12,
        "newton_max_iters": 50,
        "reference_tol": 1e-12,
    },
    "experiment": {
        "T": 10.0,
        "sample_dt": 0.1,
        "initial_state": None,
        "a_grid": [0.25, 0.5, 1.0],
        "seeds": [0],
        "perturbations": ["q1_quartic"],
        "epsilons": [0.0, 1e-3, 1e-2],
        "methods": ["implicit_midpoint", "rk4"],
    },
    "output": {"prefix": ""},
}

_NUM = (int, float)


def _num(path, x):
    if isinstance(x, bool) or not isinstance(x, _NUM) or not math.isfinite(x):
        raise ConfigError(f"{path} must be a finite number (got {x!r})")
    return float(x)


def _int(path, x):
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(f"{path} must be an integer (got {x!r})")
    return int(x)


def _str(path, x):
    if not isinstance(x, str):
        raise ConfigError(f"{path} must be a string (got {x!r})")
    return x


def _list(path, x, item):
    if not isinstance(x, list):
        raise ConfigError(f"{path} must be a list (got {x!r})")
    return [item(f"{path}[{i}]", v) for i, v in enumerate(x)]


def _merge(path, default, given):
    if not isinstance(given, dict):
        raise ConfigError(f"{path or 'config'} must be a table")
    unknown = sorted(set(given) - set(default))
    if unknown:
        where = f" in [{path}]" if path else ""
        raise ConfigError(f"unknown key(s){where}: {', '.join(unknown)}")
    out = copy.deepcopy(default)
    for k, v in given.items():
        if isinstance(default[k], dict):
            out[k] = _merge(f"{path}.{k}" if path else k, default[k], v)
        else:
            out[k] = v
    return out


def resolve(raw: dict) -> dict:
    """Validate ``raw`` and return the fully materialized configuration.

    Raises
    ------
    ConfigError
        On unknown keys, wrong types, or values violating a model invariant.
    """
    cfg = _merge("", DEFAULTS, raw)
    sysc = cfg["system"]
    preset = sysc["preset"]
    if preset is not None:
        _str("system.preset", preset)
        if preset not in PRESET_PARTS:
            raise ConfigError(f"system.preset must be one of {sorted(PRESET_PARTS)} (got {preset!r})")
        for k, v in PRESET_PARTS[preset].items():
            if sysc[k] is None:
                sysc[k] = v
    for part in ("coupling", "subsystem"):
        if sysc[part] is None:
            raise ConfigError(f"system.{part} is required without a preset")
        _str(f"system.{part}", sysc[part])
        key = f"{part}_coeffs"
        if sysc[part] == "polynomial":
            if sysc[key] is None:
                raise ConfigError(f"system.{key} is required for a polynomial {part}")
            sysc[key] = _list(f"system.{key}", sysc[key], _num)
        elif sysc[key] is not None:
            raise ConfigError(f"system.{key} only applies to a polynomial {part}")
    for k in ("m1", "m2", "k1", "k2"):
        sysc["params"][k] = _num(f"system.params.{k}", sysc["params"][k])

    pert = cfg["perturbation"]
    _str("perturbation.name", pert["name"])
    pert["epsilon"] = _num("perturbation.epsilon", pert["epsilon"])

    integ = cfg["integrator"]
    _str("integrator.method", integ["method"])
    for k in ("h", "newton_tol", "reference_tol"):
        integ[k] = _num(f"integrator.{k}", integ[k])
    integ["newton_max_iters"] = _int("integrator.newton_max_iters", integ["newton_max_iters"])

    exp = cfg["experiment"]
    exp["T"] = _num("experiment.T", exp["T"])
    exp["sample_dt"] = _num("experiment.sample_dt", exp["sample_dt"])
    if exp["initial_state"] is not None:
        exp["initial_state"] = _list("experiment.initial_state", exp["initial_state"], _num)
        if len(exp["initial_state"]) != 5:
            raise ConfigError("experiment.initial_state must have 5 entries (q1, q2, q3, p, p3)")
    exp["a_grid"] = _list("experiment.a_grid", exp["a_grid"], _num)
    exp["seeds"] = _list("experiment.seeds", exp["seeds"], _int)
    if not exp["seeds"]:
        raise ConfigError("experiment.seeds must not be empty")
    exp["perturbations"] = _list("experiment.perturbations", exp["perturbations"], _str)
    exp["epsilons"] = _list("experiment.epsilons", exp["epsilons"], _num)
    exp["methods"] = _list("experiment.methods", exp["methods"], _str)
    for m in exp["methods"]:
        if m not in METHODS:
            raise ConfigError(f"experiment.methods: {m!r} is not one of {METHODS}")
    _str("output.prefix", cfg["output"]["prefix"])

    # semantic checks through the real constructors
    build_spec(cfg)
    stepper(cfg)
    for name in exp["perturbations"]:
        try:
            catalogue.perturbation(name)
        except ValueError as e:
            raise ConfigError(f"experiment.perturbations: {e}") from None
    if any(e < 0 for e in exp["epsilons"]):
        raise ConfigError("experiment.epsilons must be >= 0")
    return cfg


def build_spec(cfg: dict) -> SystemSpec:
    sysc, pert = cfg["system"], cfg["perturbation"]
    try:
        params = Params(**sysc["params"])
        coupling = catalogue.coupling(sysc["coupling"], sysc["coupling_coeffs"])
        sub = catalogue.subsystem(sysc["subsystem"], sysc["subsystem_coeffs"])
        g = catalogue.perturbation(pert["name"])
        spec = SystemSpec(params, coupling, sub, label=sysc["preset"] or "custom")
    except ValueError as e:
        raise ConfigError(str(e)) from None
    if g is None:
        if pert["epsilon"] != 0:
            raise ConfigError("perturbation.epsilon must be 0 when perturbation.name is 'none'")
        return spec
    try:
        return spec.with_perturbation(g, pert["epsilon"])
    except ValueError as e:
        raise ConfigError(f"perturbation: {e}") from None


def stepper(cfg: dict, method: str | None = None) -> StepperConfig:
    i = cfg["integrator"]
    try:
        return StepperConfig(method=method or i["method"], h=i["h"], newton_tol=i["newton_tol"],
                             newton_max_iters=i["newton_max_iters"], reference_tol=i["reference_tol"])
    except ValueError as e:
        raise ConfigError(f"integrator: {e}") from None


def loads(text: str, fmt: str = "toml") -> dict:
    try:
        raw = json.loads(text) if fmt == "json" else tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot parse config: {e}") from None
    return resolve(raw)


def shipped_configs() -> list:
    """Names of the configurations bundled with the package."""
    return sorted(p.name[:-5] for p in resources.files("nonholo").joinpath("configs").iterdir()
                  if p.name.endswith(".toml"))


def load(path) -> dict:
    """Load a config file, or a bundled one by name (e.g. ``mcpe-repro``)."""
    path = Path(path)
    if not path.exists() and path.parent == Path(".") and path.stem in shipped_configs():
        text = resources.files("nonholo").joinpath("configs", f"{path.stem}.toml").read_text()
        return loads(text)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return loads(text, "json" if path.suffix == ".json" else "toml")


def dumps(cfg: dict) -> str:
    """Canonical JSON (sorted keys, no whitespace) of a resolved config."""
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"), allow_nan=False)


def header_lines(cfg: dict, kind: str) -> list:
    return [f"format: {FORMAT_VERSION}", f"artifact: {kind}", f"config: {dumps(cfg)}"]
