"""TOML run configuration: schema, validation, and object builders.

Every key is checked against a schema (type, default, admissible range);
unknown keys and sections are rejected so typos fail loudly with the
full key path in the message.  The resolved configuration has a stable
hash that output files embed so results can be traced to their inputs.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .drifts import DriftModel, make_drift
from .levy import LevyModel, make_model
from .perturbation import PerturbationSpec

__all__ = ["Config", "load_config", "validate_config", "config_hash"]

_REQ = object()


def _num(lo=None, hi=None, lo_open=False):
    def check(v, path):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ValueError(f"{path}: expected a number, got {type(v).__name__}")
        v = float(v)
        if lo is not None and (v <= lo if lo_open else v < lo):
            raise ValueError(f"{path}: must be {'>' if lo_open else '>='} {lo}")
        if hi is not None and v > hi:
            raise ValueError(f"{path}: must be <= {hi}")
        return v
    return check


def _int(lo=None):
    def check(v, path):
        if not isinstance(v, int) or isinstance(v, bool):
            raise ValueError(f"{path}: expected an integer, got {type(v).__name__}")
        if lo is not None and v < lo:
            raise ValueError(f"{path}: must be >= {lo}")
        return v
    return check


def _str(*allowed):
    def check(v, path):
        if not isinstance(v, str):
            raise ValueError(f"{path}: expected a string, got {type(v).__name__}")
        if allowed and v not in allowed:
            raise ValueError(f"{path}: must be one of {sorted(allowed)}")
        return v
    return check


def _bool(v, path):
    if not isinstance(v, bool):
        raise ValueError(f"{path}: expected a boolean, got {type(v).__name__}")
    return v


def _num_list(v, path):
    if not isinstance(v, list) or not v or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ValueError(f"{path}: expected a non-empty list of numbers")
    return [float(x) for x in v]


# section -> key -> (default_or_REQUIRED, checker); None default = "absent"
_SCHEMA = {
    "run": {
        "seed": (12345, _int(0)),
        "threads": (1, _int(1)),
        "out": (".", _str()),
    },
    "model": {
        "name": ("tempered_stable", _str("tempered_stable")),
        "alpha": (_REQ, _num(0.0, 2.0, lo_open=True)),
        "lambda_plus": (1.0, _num(0.0, lo_open=True)),
        "lambda_minus": (None, _num(0.0, lo_open=True)),
        "scale_plus": (1.0, _num(0.0, lo_open=True)),
        "scale_minus": (None, _num(0.0, lo_open=True)),
        "one_sided": (False, _bool),
        "z_drift": (0.0, _num()),
    },
    "drift": {
        "name": (_REQ, _str()),
        "theta_lo": (None, _num()),
        "theta_hi": (None, _num()),
    },
    "perturbation": {
        "u0": (1.0, _num(0.0, lo_open=True)),
        "u1": (None, _num(0.0, lo_open=True)),
        "c_max": (8.0, _num(0.0, lo_open=True)),
    },
    "simulation": {
        "horizon": (1.0, _num(0.0, lo_open=True)),
        "x0": (1.0, _num()),
        "theta": (_REQ, _num()),
        "n_paths": (100_000, _int(1)),
        "step": (None, _num(0.0, lo_open=True)),
        "activity_target": (50.0, _num(1.0)),
        "eps_trunc": (None, _num(0.0, lo_open=True)),
        "chunk": (25_000, _int(1)),
        "dx_floor": (1e-12, _num(0.0, lo_open=True)),
        "assumption_policy": ("warn", _str("warn", "error", "skip")),
    },
    "density": {
        "y": (None, _num_list),
        "y_lo": (-2.0, _num()),
        "y_hi": (3.0, _num()),
        "y_n": (11, _int(2)),
        "rep": ("both", _str("1", "2", "both")),
    },
    "score": {
        "y": (None, _num_list),
        "bandwidth": (None, _num(0.0, lo_open=True)),
        "ess_min": (30.0, _num(1.0)),
    },
    "fisher": {
        "n_draws": (2000, _int(2)),
        "draw_seed_offset": (1, _int(0)),
        "bandwidth": (None, _num(0.0, lo_open=True)),
    },
    "mle": {
        "n_obs": (50, _int(1)),
        "delta": (0.5, _num(0.0, lo_open=True)),
        "n_mc": (2000, _int(10)),
        "tol": (8e-3, _num(0.0, lo_open=True)),
        "n_scan": (7, _int(3)),
        "p_floor": (1e-10, _num(0.0, lo_open=True)),
        "obs_theta": (None, _num()),
    },
    "crlb": {
        "n_replicas": (20, _int(2)),
        "n_outer": (24, _int(2)),
        "n_mc_fisher": (3000, _int(10)),
        "dtheta_bias": (0.15, _num(0.0, lo_open=True)),
        "n_bias_pairs": (8, _int(0)),
    },
}

_REQUIRED_SECTIONS = ("model", "drift", "simulation")


@dataclass(frozen=True)
class Config:
    """Validated, fully defaulted configuration."""

    raw: dict

    def __getitem__(self, section: str) -> dict:
        return self.raw[section]

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def build_model(self) -> LevyModel:
        m = self.raw["model"]
        kw = {k: v for k, v in m.items() if k != "name" and v is not None}
        return make_model(m["name"], **kw)

    def build_spec(self) -> PerturbationSpec:
        p = self.raw["perturbation"]
        u1 = p["u1"] if p["u1"] is not None else 0.5 * p["u0"]
        return PerturbationSpec(u0=p["u0"], u1=u1, c_max=p["c_max"])

    def build_drift(self) -> DriftModel:
        d = self.raw["drift"]
        return make_drift(d["name"], theta_lo=d["theta_lo"], theta_hi=d["theta_hi"])


def validate_config(data: dict) -> Config:
    if not isinstance(data, dict):
        raise ValueError("configuration root must be a table")
    for sec in data:
        if sec not in _SCHEMA:
            raise ValueError(f"unknown section [{sec}]; known: {sorted(_SCHEMA)}")
        if not isinstance(data[sec], dict):
            raise ValueError(f"[{sec}] must be a table")
    for sec in _REQUIRED_SECTIONS:
        if sec not in data:
            raise ValueError(f"missing required section [{sec}]")
    resolved = {}
    for sec, keys in _SCHEMA.items():
        given = data.get(sec, {})
        for key in given:
            if key not in keys:
                raise ValueError(f"{sec}.{key}: unknown key; known: {sorted(keys)}")
        out = {}
        for key, (default, check) in keys.items():
            if key in given:
                out[key] = check(given[key], f"{sec}.{key}") if given[key] is not None else None
            elif default is _REQ:
                raise ValueError(f"{sec}.{key}: required key is missing")
            else:
                out[key] = default
        resolved[sec] = out
    d = resolved["drift"]
    if d["theta_lo"] is not None and d["theta_hi"] is not None \
            and not d["theta_lo"] < d["theta_hi"]:
        raise ValueError("drift.theta_lo must be < drift.theta_hi")
    p = resolved["perturbation"]
    if p["u1"] is not None and not p["u1"] < p["u0"]:
        raise ValueError("perturbation.u1 must be < perturbation.u0")
    cfg = Config(raw=resolved)
    cfg.build_model()
    cfg.build_spec()
    drift = cfg.build_drift()
    try:
        drift.check_theta(resolved["simulation"]["theta"])
        if resolved["mle"]["obs_theta"] is not None:
            drift.check_theta(resolved["mle"]["obs_theta"])
    except ValueError as exc:
        raise ValueError(f"theta outside the drift parameter interval: {exc}")
    return cfg


def load_config(path: str) -> Config:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ValueError(f"{path}: invalid TOML: {exc}") from None
    return validate_config(data)


def config_hash(resolved) -> str:
    if isinstance(resolved, Config):
        resolved = resolved.raw
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
