"""Scenario files: a YAML/JSON key-value tree with fixed keys and defaults.

Layout (defaults in brackets)::

    problem: scalar | euler3                     [scalar]
    flux: {name, domain, c, coefficients, table} [{name: burgers}]
    initial:
      breakpoints: [..], values: [..]            scalar, explicit data
      random: {pieces, x_range, quantum, lo, hi} scalar, seeded random data
      left: [rho, m], rows: [[x, rho, m], ..]    euler3, state switches at x
    T: final time                                [1.0]
    discretization: {n_v [256], dv [1/n_v], dx [1/n_v], n_x [1024],
                     grid [[64, 64, 32]], max_fronts [200000]}
    window: [a, b]                               [derived from the fronts]
    diagnostics: {residual, concentration, dissipation, oleinik, probes,
                  curves, current, besov, kinetic_g}
    probes: [[t, x], ..]                         [[]]
    besov: {alpha [0.5], window [[0.25, 0.75]], deltas [[0.05, 0.1, 0.2, 0.4]]}
    euler: {c [0.2], M [10]}
    output: directory                            [out]
    seed: 64-bit unsigned integer                [20240607]

Unknown keys are rejected with their full path.
"""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import ValidationError

_REQ = object()


class Leaf:
    def __init__(self, types, default=None, check=None, nullable=False):
        self.types = types if isinstance(types, tuple) else (types,)
        self.default = default
        self.check = check
        self.nullable = nullable


def _pos(x):
    return x > 0


def _nonneg_int(x):
    return 0 <= x < 2 ** 64


def _pair(x):
    return len(x) == 2 and all(isinstance(v, (int, float)) for v in x) and x[0] < x[1]


def _grid(x):
    return len(x) == 3 and all(isinstance(v, int) and v >= 1 for v in x)


def _problem(x):
    return x in ("scalar", "euler3")


NUM = (int, float)

SCHEMA = {
    "problem": Leaf(str, "scalar", _problem),
    "flux": {
        "name": Leaf(str, "burgers"),
        "domain": Leaf(list, [0.0, 1.0], _pair),
        "c": Leaf(NUM, None, nullable=True),
        "coefficients": Leaf(list, None, nullable=True),
        "table": Leaf(list, None, nullable=True),
    },
    "initial": {
        "breakpoints": Leaf(list, None, nullable=True),
        "values": Leaf(list, None, nullable=True),
        "random": {
            "pieces": Leaf(int, None, lambda n: n >= 1, nullable=True),
            "x_range": Leaf(list, [0.0, 1.0], _pair),
            "quantum": Leaf(NUM, 1.0 / 64, _pos, nullable=True),
            "lo": Leaf(NUM, 0.0),
            "hi": Leaf(NUM, 1.0),
        },
        "left": Leaf(list, None, nullable=True),
        "rows": Leaf(list, None, nullable=True),
    },
    "T": Leaf(NUM, 1.0, _pos),
    "discretization": {
        "n_v": Leaf(int, 256, lambda n: n >= 2),
        "dv": Leaf(NUM, None, _pos, nullable=True),
        "dx": Leaf(NUM, None, _pos, nullable=True),
        "n_x": Leaf(int, 1024, _pos),
        "grid": Leaf(list, [64, 64, 32], _grid),
        "max_fronts": Leaf(int, 200_000, _pos),
    },
    "window": Leaf(list, None, _pair, nullable=True),
    "diagnostics": {
        "residual": Leaf(bool, True),
        "concentration": Leaf(bool, True),
        "dissipation": Leaf(bool, True),
        "oleinik": Leaf(bool, True),
        "probes": Leaf(bool, True),
        "curves": Leaf(bool, False),
        "current": Leaf(bool, False),
        "besov": Leaf(bool, False),
        "kinetic_g": Leaf(bool, True),
    },
    "probes": Leaf(list, [], lambda p: all(isinstance(q, list) and len(q) == 2 for q in p)),
    "besov": {
        "alpha": Leaf(NUM, 0.5, lambda a: 0 < a < 1),
        "window": Leaf(list, [0.25, 0.75], _pair),
        "deltas": Leaf(list, [0.05, 0.1, 0.2, 0.4], lambda d: len(d) >= 2 and all(v > 0 for v in d)),
    },
    "euler": {
        "c": Leaf(NUM, 0.2, _pos),
        "M": Leaf(NUM, 10.0, _pos),
    },
    "output": Leaf(str, "out"),
    "seed": Leaf(int, 20240607, _nonneg_int),
}


def _validate(node, schema, path):
    if not isinstance(node, dict):
        raise ValidationError("type", f"{path or 'scenario'} must be a mapping")
    for key in node:
        if key not in schema:
            raise ValidationError("unknown key", f"{path + '.' if path else ''}{key}")
    out = {}
    for key, rule in schema.items():
        kp = f"{path}.{key}" if path else key
        if isinstance(rule, dict):
            out[key] = _validate(node.get(key, {}) or {}, rule, kp)
            continue
        if key not in node or node[key] is None:
            out[key] = copy.deepcopy(rule.default)
            continue
        val = node[key]
        if isinstance(val, bool) and bool not in rule.types:
            raise ValidationError("type", f"{kp}: expected {'/'.join(t.__name__ for t in rule.types)}")
        if not isinstance(val, rule.types):
            raise ValidationError("type", f"{kp}: expected {'/'.join(t.__name__ for t in rule.types)}, "
                                          f"got {type(val).__name__}")
        if rule.check is not None and not rule.check(val):
            raise ValidationError("range", f"{kp}: value {val!r} out of range")
        out[key] = val
    return out


@dataclass
class Scenario:
    data: dict
    source: str = ""

    def __getitem__(self, key):
        return self.data[key]

    @property
    def problem(self):
        return self.data["problem"]

    @property
    def n_v(self):
        return self.data["discretization"]["n_v"]

    @property
    def dv(self):
        return self.data["discretization"]["dv"]

    @property
    def seed(self):
        return self.data["seed"]

    def output_dir(self, override=None):
        if override:
            return Path(override)
        env = os.environ.get("KINLAG_OUT")
        return Path(env) if env else Path(self.data["output"])

    def to_manifest(self):
        return copy.deepcopy(self.data)


def _resolve(data):
    disc = data["discretization"]
    if disc["dv"] is None:
        disc["dv"] = 1.0 / disc["n_v"]
    if disc["dx"] is None:
        disc["dx"] = 1.0 / disc["n_v"]
    ini = data["initial"]
    if data["problem"] == "scalar":
        explicit = ini["values"] is not None
        rnd = ini["random"]["pieces"] is not None
        if explicit == rnd:
            raise ValidationError("initial", "give exactly one of initial.values or initial.random.pieces")
        if explicit:
            bp = ini["breakpoints"] or []
            if len(ini["values"]) != len(bp) + 1:
                raise ValidationError("initial", "initial.values needs one more entry than initial.breakpoints")
            if ini["left"] is not None or ini["rows"] is not None:
                raise ValidationError("initial", "initial.left/rows are for euler3 scenarios")
    else:
        if ini["left"] is None:
            raise ValidationError("initial", "euler3 scenarios need initial.left")
        _check_euler_rows(ini, data["euler"]["c"])
    return data


def _check_euler_rows(ini, c):
    left = ini["left"]
    if len(left) != 2:
        raise ValidationError("initial", "initial.left must be [rho, m]")
    if left[0] < c:
        raise ValidationError("vacuum guard", f"initial.left: density {left[0]} below {c}")
    xs = []
    for i, row in enumerate(ini["rows"] or []):
        if len(row) != 3:
            raise ValidationError("initial", f"initial.rows[{i}] must be [x, rho, m]")
        if row[1] < c:
            raise ValidationError("vacuum guard", f"initial.rows[{i}]: density {row[1]} below {c}")
        xs.append(row[0])
    if any(b <= a for a, b in zip(xs[:-1], xs[1:])):
        raise ValidationError("initial", "initial.rows breakpoints must increase")


def parse_scenario(text, source="<string>"):
    """Parse YAML (JSON is a subset) and validate."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        raise ValidationError("parse", f"{source}{where}: {getattr(exc, 'problem', exc)}") from None
    if raw is None:
        raw = {}
    return Scenario(_resolve(_validate(raw, SCHEMA, "")), source)


def load_scenario(path):
    path = Path(path)
    if not path.is_file():
        raise ValidationError("scenario", f"no such file: {path}")
    return parse_scenario(path.read_text(), str(path))


def dump_json(obj):
    """Canonical JSON used for every emitted file."""
    return json.dumps(obj, sort_keys=True, indent=1, default=_default) + "\n"


def _default(o):
    import numpy as np
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")
