"""JSON experiment configuration: defaults, validation and object builders."""

from __future__ import annotations

import copy
import json
from importlib import resources

import numpy as np

from .correlators import CorrelatorSpec, build_correlator
from .errors import ConfigError
from .response import Detector, QuadSettings
from .switching import Comb, NascentDelta, SHAPES
from .trajectories import Worldline

DEFAULTS = {
    "detector": {"gap": 1.0, "lambda": 0.01},
    "field": {"mass": 0.0, "dim": 3},
    "state": {"kind": "vacuum", "beta": None, "omega": None, "n": 0},
    "trajectory": {"kind": "inertial", "a": 1.0, "v": 0.0},
    "comb": {"shape": "gaussian", "eta": 0.05, "tau0": 0.0, "zeta": 1.0, "teeth": 2},
    "protocol": {"zeta_grid": [0.5, 1.0, 2.0], "tau0": 0.0, "k_even": 1, "k_quarter": 1,
                 "route": "measured", "eta_fractions": [0.08, 0.04, 0.02, 0.01]},
    "sweep": {"etas": [0.2, 0.1, 0.05, 0.025], "extrapolation_order": 2},
    "scaling": {"dims": [3], "etas": [float(e) for e in np.geomspace(0.1, 0.01, 9)]},
    "quadrature": {"tol": 1e-10, "max_depth": 12},
    "regulator": {"epsilon": None},
    "output": {"directory": "results", "stem": "run"},
}

_NUMBER = (int, float)
_TYPES = {
    "detector.gap": _NUMBER, "detector.lambda": _NUMBER,
    "field.mass": _NUMBER, "field.dim": int,
    "state.kind": str, "state.beta": _NUMBER, "state.omega": _NUMBER, "state.n": _NUMBER,
    "trajectory.kind": str, "trajectory.a": _NUMBER, "trajectory.v": (int, float, list),
    "comb.shape": str, "comb.eta": _NUMBER, "comb.tau0": _NUMBER, "comb.zeta": _NUMBER, "comb.teeth": int,
    "protocol.zeta_grid": list, "protocol.tau0": _NUMBER, "protocol.k_even": int,
    "protocol.k_quarter": int, "protocol.route": str, "protocol.eta_fractions": list,
    "sweep.etas": list, "sweep.extrapolation_order": int,
    "scaling.dims": list, "scaling.etas": list,
    "quadrature.tol": _NUMBER, "quadrature.max_depth": int,
    "regulator.epsilon": _NUMBER,
    "output.directory": str, "output.stem": str,
}
_NULLABLE = {"state.beta", "state.omega", "regulator.epsilon"}
_CHOICES = {
    "state.kind": ("vacuum", "thermal", "single_mode"),
    "trajectory.kind": ("inertial", "uniformly_accelerated"),
    "comb.shape": SHAPES,
    "protocol.route": ("measured", "direct"),
}

DEMOS = ("single_mode", "accelerated_unruh", "scaling_3d")


def _check_value(path, value):
    if value is None:
        if path in _NULLABLE:
            return
        raise ConfigError("may not be null", path)
    kinds = _TYPES[path]
    if isinstance(value, bool) or not isinstance(value, kinds):
        names = kinds.__name__ if isinstance(kinds, type) else "/".join(k.__name__ for k in kinds)
        raise ConfigError(f"expected {names}, got {type(value).__name__}", path)
    if path in _CHOICES and value not in _CHOICES[path]:
        raise ConfigError(f"must be one of {_CHOICES[path]}, got {value!r}", path)
    if isinstance(value, list):
        for i, item in enumerate(value):
            if isinstance(item, bool) or not isinstance(item, _NUMBER):
                raise ConfigError(f"item {i} must be a number", path)


def resolve(user):
    """Merge ``user`` over the defaults, rejecting unknown keys and bad types."""
    if not isinstance(user, dict):
        raise ConfigError("top level must be a JSON object")
    cfg = copy.deepcopy(DEFAULTS)
    for section, body in user.items():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown key; expected one of {sorted(DEFAULTS)}", section)
        if not isinstance(body, dict):
            raise ConfigError("section must be a JSON object", section)
        for key, value in body.items():
            path = f"{section}.{key}"
            if key not in DEFAULTS[section]:
                raise ConfigError(f"unknown key; expected one of {sorted(DEFAULTS[section])}", path)
            _check_value(path, value)
            cfg[section][key] = value
    if cfg["protocol"]["zeta_grid"] == []:
        raise ConfigError("zeta grid is empty", "protocol.zeta_grid")
    return cfg


def load(path):
    """Read a config file, or a shipped demo given as ``demo:<name>``."""
    if str(path).startswith("demo:"):
        name = str(path)[5:]
        if name not in DEMOS:
            raise ConfigError(f"unknown demo {name!r}; expected one of {DEMOS}", "config")
        text = resources.files("wprobe.configs").joinpath(f"{name}.json").read_text()
    else:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", "config") from exc
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "config") from exc
    return resolve(user)


def dumps(cfg):
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"


# builders ------------------------------------------------------------

def _wrap(path, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), path) from exc


def make_trajectory(cfg):
    t, dim = cfg["trajectory"], cfg["field"]["dim"]
    if t["kind"] == "uniformly_accelerated":
        return _wrap("trajectory.a", Worldline.accelerated, t["a"], dim=dim)
    v = t["v"]
    velocity = list(v) if isinstance(v, list) else [v] + [0.0] * (dim - 1)
    return _wrap("trajectory.v", Worldline.inertial, velocity, dim=dim)


def make_spec(cfg):
    s, f = cfg["state"], cfg["field"]
    return _wrap("state", CorrelatorSpec, mass=float(f["mass"]), dim=f["dim"], state=s["kind"],
                 beta=s["beta"], omega=s["omega"], n=s["n"], trajectory=make_trajectory(cfg),
                 epsilon=cfg["regulator"]["epsilon"])


def make_correlator(cfg):
    return _wrap("state", build_correlator, make_spec(cfg))


def make_detector(cfg):
    d = cfg["detector"]
    return _wrap("detector", Detector, float(d["gap"]), float(d["lambda"]))


def make_comb(cfg):
    c = cfg["comb"]
    tooth = _wrap("comb.eta", NascentDelta, c["shape"], float(c["eta"]))
    return _wrap("comb", Comb, tooth, float(c["tau0"]), float(c["zeta"]), c["teeth"])


def make_quad(cfg, workers=None):
    q = cfg["quadrature"]
    return _wrap("quadrature", QuadSettings, tol=float(q["tol"]), max_depth=q["max_depth"], workers=workers)
