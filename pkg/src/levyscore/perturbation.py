"""Amplitude perturbation: the deformation profile and its flow group.

The perturbation acts on jump amplitudes through the ODE q' = rho(q).
The profile rho is u^2 on [-u1, u1], zero outside (-u0, u0), and a C2
quintic bridge in |u| on [u1, u0].  Key facts used throughout:

* rho >= 0, so the flow Q_c is monotone in c and never crosses the
  equilibria 0 and +/-u0: amplitudes keep their sign and magnitudes
  stay inside (0, u0) (outside, the flow is frozen).
* Where the trajectory stays inside the quadratic region the flow is
  closed form, Q_c(u) = u / (1 - u c), with Jacobian (1 - u c)^-2.
* Elsewhere we integrate with RK4; rho is C2 with piecewise-polynomial
  pieces, so fine fixed substeps keep the group law tight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

__all__ = ["PerturbationSpec", "rho", "rho_d1", "rho_d2", "q_flow", "q_flow_with_jacobian"]

_FLOW_SUBSTEP = 2e-3  # substep for the RK4 branch of the flow


def _bridge_coeffs(u1: float, u0: float) -> np.ndarray:
    """Quintic on s = (|u|-u1)/(u0-u1) matching u^2 at u1 and zero at u0."""
    d = u0 - u1
    c = np.zeros(6)
    c[0] = u1 * u1
    c[1] = 2.0 * u1 * d
    c[2] = d * d
    # remaining coefficients from value/slope/curvature zero at s = 1
    a = np.array([[1.0, 1.0, 1.0], [3.0, 4.0, 5.0], [6.0, 12.0, 20.0]])
    b = -np.array([c[0] + c[1] + c[2], c[1] + 2 * c[2], 2 * c[2]])
    c[3:] = np.linalg.solve(a, b)
    return c


@dataclass(frozen=True)
class PerturbationSpec:
    """Deformation profile parameters.

    u1 < u0 are the inner (exactly quadratic) and outer (support) radii.
    c_max bounds the flow parameter accepted by q_flow; the flow itself
    is globally defined, the cap just rejects nonsensical inputs early.
    """

    u0: float
    u1: float
    c_max: float = 8.0
    bridge_coeffs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (0.0 < self.u1 < self.u0):
            raise ValueError(f"need 0 < u1 < u0, got u1={self.u1}, u0={self.u0}")
        if self.c_max <= 0:
            raise ValueError("c_max must be positive")
        coeffs = _bridge_coeffs(self.u1, self.u0)
        s = np.linspace(0.0, 1.0, 4001)
        # the quintic is tangent to zero at s = 1, so roundoff puts the
        # sampled minimum a few ulp either side of zero; only a dip on the
        # scale of the profile itself (u1^2) is a real violation
        if P.polyval(s, coeffs).min() < -1e-9 * self.u1 * self.u1:
            raise ValueError(
                f"quintic bridge dips negative for u1={self.u1}, u0={self.u0}; "
                "choose a larger u1/u0 ratio")
        object.__setattr__(self, "bridge_coeffs", coeffs)


def _regions(u, spec):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    au = np.abs(u)
    quad = au <= spec.u1
    outer = au >= spec.u0
    bridge = ~(quad | outer)
    return u, au, quad, bridge


def _unwrap(out, u_in):
    return out[0] if np.ndim(u_in) == 0 else out


def rho(u, spec: PerturbationSpec):
    v, au, quad, bridge = _regions(u, spec)
    out = np.where(quad, v * v, 0.0)
    if bridge.any():
        s = (au[bridge] - spec.u1) / (spec.u0 - spec.u1)
        out[bridge] = P.polyval(s, spec.bridge_coeffs)
    return _unwrap(out, u)


def rho_d1(u, spec: PerturbationSpec):
    v, au, quad, bridge = _regions(u, spec)
    out = np.where(quad, 2.0 * v, 0.0)
    if bridge.any():
        d = spec.u0 - spec.u1
        s = (au[bridge] - spec.u1) / d
        out[bridge] = np.sign(v[bridge]) * P.polyval(s, P.polyder(spec.bridge_coeffs)) / d
    return _unwrap(out, u)


def rho_d2(u, spec: PerturbationSpec):
    v, au, quad, bridge = _regions(u, spec)
    out = np.where(quad & (au < spec.u0), 2.0, 0.0)
    if bridge.any():
        d = spec.u0 - spec.u1
        s = (au[bridge] - spec.u1) / d
        out[bridge] = P.polyval(s, P.polyder(spec.bridge_coeffs, 2)) / (d * d)
    return _unwrap(out, u)


def _check_c(c: float, spec: PerturbationSpec) -> float:
    c = float(c)
    if not np.isfinite(c) or abs(c) > spec.c_max:
        raise ValueError(f"flow parameter c={c} outside validity range |c| <= {spec.c_max}")
    return c


def _closed_form_ok(u, c, spec):
    """True where the whole trajectory [0, c] stays inside |q| <= u1."""
    au = np.abs(u)
    # the magnitude grows only when c pushes away from zero, i.e. sign(u)*c > 0
    growth = max(0.0, c) * (u > 0) + max(0.0, -c) * (u < 0)
    return au * (1.0 + spec.u1 * growth) <= spec.u1


def q_flow(u, c: float, spec: PerturbationSpec):
    """Flow map Q_c applied elementwise to amplitudes u."""
    return q_flow_with_jacobian(u, c, spec)[0]


def q_flow_with_jacobian(u, c: float, spec: PerturbationSpec):
    """Return (Q_c(u), log dQ_c/du) elementwise.

    The log-Jacobian integrates rho'(Q_s(u)) along the flow; it is what
    the jump-measure density under the deformation is built from.
    """
    c = _check_c(c, spec)
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    out = u.copy()
    logj = np.zeros_like(out)
    if c == 0.0:
        return (out[0], logj[0]) if scalar else (out, logj)

    closed = _closed_form_ok(u, c, spec)
    moving = (np.abs(u) > 0) & (np.abs(u) < spec.u0)
    cf = closed & moving
    if cf.any():
        denom = 1.0 - u[cf] * c
        out[cf] = u[cf] / denom
        logj[cf] = -2.0 * np.log(denom)

    rk = moving & ~closed
    if rk.any():
        q = u[rk]
        lj = np.zeros_like(q)
        n_sub = max(32, int(np.ceil(abs(c) / _FLOW_SUBSTEP)))
        h = c / n_sub
        for _ in range(n_sub):
            k1, j1 = rho(q, spec), rho_d1(q, spec)
            q2 = q + 0.5 * h * k1
            k2, j2 = rho(q2, spec), rho_d1(q2, spec)
            q3 = q + 0.5 * h * k2
            k3, j3 = rho(q3, spec), rho_d1(q3, spec)
            q4 = q + h * k3
            k4, j4 = rho(q4, spec), rho_d1(q4, spec)
            q = q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            lj = lj + (h / 6.0) * (j1 + 2.0 * j2 + 2.0 * j3 + j4)
        out[rk] = q
        logj[rk] = lj

    return (out[0], logj[0]) if scalar else (out, logj)
