"""Scenario configuration: a JSON document with five sections.

Every key is validated before any computation starts.  Unknown keys are
rejected with their full path, parse errors carry line and column.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .initial_data import BeamSpec
from .integrate import Tolerances
from .medium import KINDS, MediumModel

DEFAULTS: dict = {
    "medium": {
        "kind": "tanh_slab",
        "n_left": 1.0,
        "n_right": 1.5,
        "axis": [1.0, 0.0, 0.0],
        "center": 9.0,
        "width": 1.0,
        "alpha": 0.1,
        "amplitude": 0.2,
        "sigma": 1.0,
    },
    "beam": {
        "x0": [0.0, 0.0, 0.0],
        "direction": [0.8660254037844387, 0.5, 0.0],
        "k": 1.0,
        "S0": [1.0, 0.2, 0.1, 1.5, 0.3, 0.8],
        "B0": 0.0,
        "amplitude": 1.0,
        "s": 1.0,
        "omega": 400.0,
        "normalize_energy": False,
    },
    "integration": {
        "t_end": 20.0,
        "rtol": 1e-9,
        "atol": 1e-12,
        "sample_stride": 0.1,
    },
    "output": {
        "dir": "out",
        "format": "csv",
        "precision": 17,
    },
    "sweep": {
        "omega_list": [100.0, 200.0, 400.0, 800.0],
        "helicities": [1.0, -1.0],
    },
}

_SYM6 = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


@dataclass(frozen=True)
class ScenarioConfig:
    medium: MediumModel
    beam: BeamSpec
    tol: Tolerances
    t_end: float
    sample_stride: float | None
    out_dir: str
    out_format: str
    precision: int
    omega_list: tuple
    helicities: tuple
    raw: dict

    def fmt(self, x: float) -> str:
        return format(float(x), f".{self.precision}g")


def _number(path, v, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{path} must be a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"{path} must be positive, got {v!r}")
    return float(v)


def _vec3(path, v):
    if not isinstance(v, list) or len(v) != 3:
        raise ConfigError(f"{path} must be a list of 3 numbers")
    return [_number(f"{path}[{i}]", x) for i, x in enumerate(v)]


def _sym(path, v):
    """A scalar a (meaning a*I), 6 upper-triangle entries, or a 3x3 nested list."""
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return _number(path, v) * np.eye(3)
    if isinstance(v, list) and len(v) == 6:
        m = np.zeros((3, 3))
        for (i, j), x in zip(_SYM6, v):
            m[i, j] = m[j, i] = _number(f"{path}[{i}{j}]", x)
        return m
    if isinstance(v, list) and len(v) == 3 and all(isinstance(r, list) and len(r) == 3 for r in v):
        return np.array([[_number(f"{path}[{i}][{j}]", x) for j, x in enumerate(r)] for i, r in enumerate(v)])
    raise ConfigError(f"{path} must be a scalar, 6 upper-triangle entries or a 3x3 matrix")


def _merge(defaults, given, path=""):
    if not isinstance(given, dict):
        raise ConfigError(f"{path or 'config'} must be an object")
    out = copy.deepcopy(defaults)
    for key, val in given.items():
        p = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key '{p}'")
        if isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], val, p)
        else:
            out[key] = val
    return out


def load_document(text: str) -> dict:
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return doc


def parse_config(text: str) -> ScenarioConfig:
    return build_config(load_document(text))


def build_config(doc: dict) -> ScenarioConfig:
    raw = _merge(DEFAULTS, doc)
    m = raw["medium"]
    if m["kind"] not in KINDS:
        raise ConfigError(f"medium.kind must be one of {', '.join(KINDS)}, got {m['kind']!r}")
    mkw = {"kind": m["kind"], "axis": tuple(_vec3("medium.axis", m["axis"]))}
    for key in ("n_left", "n_right", "center", "alpha", "amplitude"):
        mkw[key] = _number(f"medium.{key}", m[key])
    for key in ("width", "sigma"):
        mkw[key] = _number(f"medium.{key}", m[key], positive=True)
    try:
        medium = MediumModel(**mkw)
    except ConfigError as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith("medium.") else f"medium: {msg}") from None

    b = raw["beam"]
    S0 = _sym("beam.S0", b["S0"])
    if np.min(np.linalg.eigvalsh(0.5 * (S0 + S0.T))) <= 0:
        raise ConfigError("beam.S0 must be positive definite")
    if not isinstance(b["normalize_energy"], bool):
        raise ConfigError("beam.normalize_energy must be true or false")
    omega = _number("beam.omega", b["omega"])
    if omega <= 1.0:
        raise ConfigError(f"beam.omega must exceed 1, got {omega!r}")
    direction = np.array(_vec3("beam.direction", b["direction"]))
    if abs(np.linalg.norm(direction) - 1.0) > 1e-12:
        raise ConfigError("beam.direction must be a unit vector")
    beam = BeamSpec(x0=np.array(_vec3("beam.x0", b["x0"])), direction=direction,
                    k=_number("beam.k", b["k"], positive=True), S0=S0, B0=_sym("beam.B0", b["B0"]),
                    amplitude=_number("beam.amplitude", b["amplitude"], positive=True),
                    s=_number("beam.s", b["s"]), omega=omega, normalize_energy=b["normalize_energy"])

    it = raw["integration"]
    t_end = _number("integration.t_end", it["t_end"], positive=True)
    tol = Tolerances(_number("integration.rtol", it["rtol"], positive=True),
                     _number("integration.atol", it["atol"], positive=True))
    stride = it["sample_stride"]
    stride = None if stride is None else _number("integration.sample_stride", stride, positive=True)

    o = raw["output"]
    if not isinstance(o["dir"], str) or not o["dir"]:
        raise ConfigError("output.dir must be a non-empty string")
    if o["format"] not in ("csv", "json"):
        raise ConfigError(f"output.format must be csv or json, got {o['format']!r}")
    prec = o["precision"]
    if isinstance(prec, bool) or not isinstance(prec, int) or not 1 <= prec <= 17:
        raise ConfigError(f"output.precision must be an integer in [1, 17], got {prec!r}")

    sw = raw["sweep"]
    if not isinstance(sw["omega_list"], list) or not sw["omega_list"]:
        raise ConfigError("sweep.omega_list must be a non-empty list")
    omegas = tuple(_number(f"sweep.omega_list[{i}]", w) for i, w in enumerate(sw["omega_list"]))
    for i, w in enumerate(omegas):
        if w <= 1.0:
            raise ConfigError(f"sweep.omega_list[{i}] must exceed 1, got {w!r}")
    if not isinstance(sw["helicities"], list) or not sw["helicities"]:
        raise ConfigError("sweep.helicities must be a non-empty list")
    hel = tuple(_number(f"sweep.helicities[{i}]", h) for i, h in enumerate(sw["helicities"]))
    for i, h in enumerate(hel):
        if abs(h) > 1.0:
            raise ConfigError(f"sweep.helicities[{i}] must lie in [-1, 1]")

    return ScenarioConfig(medium, beam, tol, t_end, stride, o["dir"], o["format"], prec,
                          omegas, hel, raw)


def defaults_json() -> str:
    return json.dumps(DEFAULTS, indent=2)
