"""Drift families a(theta, x) with the partial derivatives the
variation stack consumes.

Every callable is vectorised in x (theta is scalar).  The interface
stops at the derivatives actually used: a_x, a_xx, a_xxx for the state
variations, a_th and a_xth for the parameter ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["DriftModel", "DRIFT_REGISTRY", "make_drift", "validate_drift"]


@dataclass(frozen=True)
class DriftModel:
    name: str
    a: Callable
    a_x: Callable
    a_xx: Callable
    a_xxx: Callable
    a_th: Callable
    a_xth: Callable
    theta_lo: float = 0.1
    theta_hi: float = 3.0

    def check_theta(self, theta: float) -> float:
        theta = float(theta)
        if not self.theta_lo <= theta <= self.theta_hi:
            raise ValueError(
                f"theta={theta} outside admissible interval "
                f"[{self.theta_lo}, {self.theta_hi}] of drift '{self.name}'")
        return theta


def _linear() -> DriftModel:
    z = lambda th, x: np.zeros_like(np.asarray(x, dtype=float))
    return DriftModel(
        name="linear",
        a=lambda th, x: -th * np.asarray(x, dtype=float),
        a_x=lambda th, x: np.full_like(np.asarray(x, dtype=float), -th),
        a_xx=z, a_xxx=z,
        a_th=lambda th, x: -np.asarray(x, dtype=float),
        a_xth=lambda th, x: np.full_like(np.asarray(x, dtype=float), -1.0),
    )


def _tanh() -> DriftModel:
    def sech2(x):
        t = np.tanh(x)
        return 1.0 - t * t
    return DriftModel(
        name="tanh",
        a=lambda th, x: -th * np.tanh(x),
        a_x=lambda th, x: -th * sech2(x),
        a_xx=lambda th, x: 2.0 * th * np.tanh(x) * sech2(x),
        a_xxx=lambda th, x: 2.0 * th * sech2(x) * (sech2(x) - 2.0 * np.tanh(x) ** 2),
        a_th=lambda th, x: -np.tanh(x),
        a_xth=lambda th, x: -sech2(x),
    )


def _sine() -> DriftModel:
    return DriftModel(
        name="sine",
        a=lambda th, x: -th * (x + 0.5 * np.sin(x)),
        a_x=lambda th, x: -th * (1.0 + 0.5 * np.cos(x)),
        a_xx=lambda th, x: 0.5 * th * np.sin(x),
        a_xxx=lambda th, x: 0.5 * th * np.cos(x),
        a_th=lambda th, x: -(x + 0.5 * np.sin(x)),
        a_xth=lambda th, x: -(1.0 + 0.5 * np.cos(x)),
    )


def _theta_free() -> DriftModel:
    """Mean reversion without any theta dependence: the likelihood in
    theta is flat and the score vanishes; used to exercise the
    unidentifiable branch."""
    z = lambda th, x: np.zeros_like(np.asarray(x, dtype=float))
    return DriftModel(
        name="theta_free",
        a=lambda th, x: -np.asarray(x, dtype=float),
        a_x=lambda th, x: np.full_like(np.asarray(x, dtype=float), -1.0),
        a_xx=z, a_xxx=z, a_th=z, a_xth=z,
    )


DRIFT_REGISTRY = {
    "linear": _linear,
    "tanh": _tanh,
    "sine": _sine,
    "theta_free": _theta_free,
}


def make_drift(name: str, theta_lo: float | None = None, theta_hi: float | None = None) -> DriftModel:
    try:
        drift = DRIFT_REGISTRY[name]()
    except KeyError:
        raise ValueError(f"unknown drift '{name}'; known: {sorted(DRIFT_REGISTRY)}")
    if theta_lo is not None or theta_hi is not None:
        lo = drift.theta_lo if theta_lo is None else float(theta_lo)
        hi = drift.theta_hi if theta_hi is None else float(theta_hi)
        if not lo < hi:
            raise ValueError(f"need theta_lo < theta_hi, got [{lo}, {hi}]")
        drift = DriftModel(**{**drift.__dict__, "theta_lo": lo, "theta_hi": hi})
    return drift


def validate_drift(drift: DriftModel, thetas=None, xs=None, rel_tol: float = 1e-5) -> dict:
    """Finite-difference consistency of the supplied derivatives.

    Central differences of a (and a_x, a_xx, a_th) are compared against
    the declared partials on a theta-x grid; the report carries the
    worst relative error per derivative and grid suprema of the higher
    partials (a boundedness indication, not a proof).
    """
    thetas = np.asarray([drift.theta_lo, 0.5 * (drift.theta_lo + drift.theta_hi),
                         drift.theta_hi] if thetas is None else thetas, dtype=float)
    xs = np.asarray(np.linspace(-3.0, 3.0, 13) if xs is None else xs, dtype=float)
    hx, hth = 1e-5, 1e-5
    errs = {k: 0.0 for k in ("a_x", "a_xx", "a_xxx", "a_th", "a_xth")}
    sups = {k: 0.0 for k in ("a_x", "a_xx", "a_xxx", "a_th", "a_xth")}

    def rel(fd, an):
        scale = max(1.0, float(np.max(np.abs(an))))
        return float(np.max(np.abs(fd - an))) / scale

    for th in thetas:
        fd = (drift.a(th, xs + hx) - drift.a(th, xs - hx)) / (2 * hx)
        errs["a_x"] = max(errs["a_x"], rel(fd, drift.a_x(th, xs)))
        fd = (drift.a_x(th, xs + hx) - drift.a_x(th, xs - hx)) / (2 * hx)
        errs["a_xx"] = max(errs["a_xx"], rel(fd, drift.a_xx(th, xs)))
        fd = (drift.a_xx(th, xs + hx) - drift.a_xx(th, xs - hx)) / (2 * hx)
        errs["a_xxx"] = max(errs["a_xxx"], rel(fd, drift.a_xxx(th, xs)))
        fd = (drift.a(th + hth, xs) - drift.a(th - hth, xs)) / (2 * hth)
        errs["a_th"] = max(errs["a_th"], rel(fd, drift.a_th(th, xs)))
        fd = (drift.a_x(th + hth, xs) - drift.a_x(th - hth, xs)) / (2 * hth)
        errs["a_xth"] = max(errs["a_xth"], rel(fd, drift.a_xth(th, xs)))
        for k, f in (("a_x", drift.a_x), ("a_xx", drift.a_xx), ("a_xxx", drift.a_xxx),
                     ("a_th", drift.a_th), ("a_xth", drift.a_xth)):
            sups[k] = max(sups[k], float(np.max(np.abs(f(th, xs)))))
    return dict(max_rel_err=errs, grid_sup=sups,
                passed=bool(max(errs.values()) < rel_tol))
