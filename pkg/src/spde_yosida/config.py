"""Scenario files: TOML tables mapped onto :class:`~spde_yosida.solver.Scenario`.

Layout (every table and key optional unless stated)::

    [time]            T, dt (required), scheme, stride
    [operator]        n_x (required), shift, alpha_A
    [graph]           kind (required) + its parameters, translate, beta
    [initial]         profile + its parameters
    [noise]           gamma, scale, coefficients, s, seed
    [forcing]         alpha
    [lambda]          value, lambda0, ratio, count
    [certificates]    tolerance
    [noise_check]     samples, first_seed

Unknown tables or keys raise :class:`ConfigError` naming the key.
"""
from __future__ import annotations

import copy
import os
import sys

from .errors import ConfigError
from .monotone import ExpMinusOne, Linear, Power, QuasiShift, Shifted, SignGraph, Tabulated
from .noise import DiffusionSpec
from .semigroup import TimeGrid

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA = {
    "time": {"T", "dt", "scheme", "stride"},
    "operator": {"n_x", "shift", "alpha_A"},
    "graph": {"kind", "a", "p", "csv", "r_min", "r_max", "step", "translate", "beta"},
    "initial": {"profile", "k", "amplitude", "center", "width", "norm", "seed", "decay"},
    "noise": {"gamma", "scale", "coefficients", "s", "seed"},
    "forcing": {"alpha"},
    "lambda": {"value", "lambda0", "ratio", "count"},
    "certificates": {"tolerance"},
    "noise_check": {"samples", "first_seed"},
}
REQUIRED = {"time": ("T", "dt"), "operator": ("n_x",), "graph": ("kind",)}
GRAPH_KEYS = {
    "linear": {"a"},
    "power": {"p"},
    "sign": set(),
    "expm1": set(),
    "tabulated": {"csv", "p", "r_min", "r_max", "step"},
}


def _parse_value(text):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(data, overrides):
    """Apply ``table.key=value`` strings; values are read as TOML, else as strings."""
    data = copy.deepcopy(data)
    for item in overrides or ():
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or "." not in key:
            raise ConfigError(f"override {item!r} must look like table.key=value")
        table, _, name = key.partition(".")
        if table not in SCHEMA:
            raise ConfigError(f"unknown config table {table!r} in override {item!r}")
        if name not in SCHEMA[table]:
            raise ConfigError(f"unknown config key {key!r} in override {item!r}")
        data.setdefault(table, {})[name] = _parse_value(value.strip())
    return data


def read_raw(path):
    """Parse a scenario file; syntax errors keep the parser's line/column."""
    path = os.fspath(path)
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"scenario file not found: {path}") from None
    except IsADirectoryError:
        raise ConfigError(f"scenario path is a directory: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def validate(data):
    for table, body in data.items():
        if table not in SCHEMA:
            raise ConfigError(f"unknown config table {table!r}")
        if not isinstance(body, dict):
            raise ConfigError(f"{table!r} must be a table")
        for key in body:
            if key not in SCHEMA[table]:
                raise ConfigError(f"unknown config key {table}.{key!r}")
    for table, keys in REQUIRED.items():
        for key in keys:
            if key not in data.get(table, {}):
                raise ConfigError(f"missing required config key {table}.{key}")
    kind = data["graph"]["kind"]
    if kind not in GRAPH_KEYS:
        raise ConfigError(f"unknown graph kind {kind!r}; expected one of {sorted(GRAPH_KEYS)}")
    for key in data["graph"]:
        if key not in GRAPH_KEYS[kind] | {"kind", "translate", "beta"}:
            raise ConfigError(f"config key graph.{key!r} does not apply to graph kind {kind!r}")


def _num(table, key, default, kind=float):
    value = table.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"config key {key!r} must be a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"config key {key!r} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def build_graph(g, base_dir="."):
    kind = g["kind"]
    if kind == "linear":
        graph = Linear(_num(g, "a", 1.0))
    elif kind == "power":
        graph = Power(_num(g, "p", 3.0))
    elif kind == "sign":
        graph = SignGraph()
    elif kind == "expm1":
        graph = ExpMinusOne()
    elif "csv" in g:
        graph = Tabulated.from_csv(os.path.join(base_dir, g["csv"]))
    else:
        import numpy as np

        step = _num(g, "step", 1e-3)
        r = np.linspace(_num(g, "r_min", -5.0), _num(g, "r_max", 5.0),
                        int(round((_num(g, "r_max", 5.0) - _num(g, "r_min", -5.0)) / step)) + 1)
        graph = Tabulated.from_graph(Power(_num(g, "p", 3.0)), r)
    if "translate" in g and _num(g, "translate", 0.0) != 0.0:
        graph = Shifted(graph, _num(g, "translate", 0.0))
    if "beta" in g and _num(g, "beta", 0.0) != 0.0:
        graph = QuasiShift(graph, _num(g, "beta", 0.0))
    return graph


def build_noise(n):
    if "coefficients" in n:
        coeffs = n["coefficients"]
        if not isinstance(coeffs, list):
            raise ConfigError("noise.coefficients must be an array of numbers")
        return DiffusionSpec(gamma=None, coefficients=tuple(coeffs), s=_num(n, "s", 0.75))
    return DiffusionSpec(gamma=_num(n, "gamma", 2.0), scale=_num(n, "scale", 1.0), s=_num(n, "s", 0.75))


def scenario_from_dict(data, base_dir=".", seed=None):
    """Build a Scenario from parsed TOML (after overrides)."""
    from .solver import Scenario, initial_profile

    validate(data)
    t, op, lam = data["time"], data["operator"], data.get("lambda", {})
    noise = data.get("noise", {})
    n_x = _num(op, "n_x", None, int)
    init = dict(data.get("initial", {}))
    profile = init.pop("profile", "bump")
    u0 = initial_profile(n_x, profile, **init)
    if seed is None:
        seed = _num(noise, "seed", 0, int)
    return Scenario(
        graph=build_graph(data["graph"], base_dir),
        u0=u0,
        grid=TimeGrid(_num(t, "T", None), _num(t, "dt", None)),
        noise=build_noise(noise),
        seed=int(seed),
        shift=_num(op, "shift", 0.0),
        lam=_num(lam, "value", 1e-2),
        lambda0=_num(lam, "lambda0", 0.1),
        ratio=_num(lam, "ratio", 0.5),
        count=_num(lam, "count", 8, int),
        scheme=str(t.get("scheme", "semi_implicit")),
        alpha=_num(data.get("forcing", {}), "alpha", 0.0),
        beta=0.0,
        alpha_A=_num(op, "alpha_A", 0.0),
        stride=_num(t, "stride", 10, int),
        meta={"u0": {"profile": profile, **init}, "config": data},
    )


def load_scenario(path, overrides=(), seed=None):
    """Read, override, validate and build. Returns ``(scenario, data)``."""
    data = apply_overrides(read_raw(path), overrides)
    return scenario_from_dict(data, os.path.dirname(os.path.abspath(os.fspath(path))), seed), data


def certificate_tolerance(data):
    tol = _num(data.get("certificates", {}), "tolerance", 1e-3)
    if not tol >= 0.0:
        raise ConfigError(f"certificates.tolerance must be >= 0, got {tol!r}")
    return tol
