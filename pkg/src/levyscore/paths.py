"""Path engine: jump-adapted integration of the state and its variation
stack.

Between jumps every component follows a smooth ODE driven by the drift
and its partials; at a jump of amplitude u the state gains u and the
amplitude variations gain the deformation terms rho, rho rho', and
rho (rho'^2 + rho rho'').  The compensated-jump count delta1 and its
variation accumulate at jumps and drift linearly between them, so they
are assembled exactly from the jump list without entering the ODE.

Components integrated between jumps (prime = d/dt):

    x'      = a + drift_const
    calE'   = a_x calE                 (flow derivative)
    dX'     = a_x dX                   (first amplitude variation)
    d2X'    = a_xx dX^2 + a_x d2X
    d3X'    = a_xxx dX^3 + 3 a_xx dX d2X + a_x d3X
    dThX'   = a_x dThX + a_th          (parameter variation)
    dDThX'  = a_xx dX dThX + a_x dDThX + a_xth dX

drift_const collects the constant part of the driving process: its
drift plus the compensation for truncated small jumps.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .drifts import DriftModel
from .levy import JumpRecord, LevyModel, chi, chi_d1, compensator_integrals
from .perturbation import PerturbationSpec, rho, rho_d1, rho_d2

__all__ = [
    "VariationState", "PathRealization", "engine_coeffs",
    "flow_step", "jump_update", "solve_path", "solve_batch",
]

DEFAULT_STEP_RULE = (200, 1e-3)  # step = min(horizon/200, 1e-3)


def default_step(horizon: float) -> float:
    return min(horizon / DEFAULT_STEP_RULE[0], DEFAULT_STEP_RULE[1])


@dataclass
class VariationState:
    """State plus variation stack at a point in time."""

    x: float
    cal_e: float = 1.0
    dx: float = 0.0
    d2x: float = 0.0
    d3x: float = 0.0
    dth_x: float = 0.0
    d_dth_x: float = 0.0
    delta1: float = 0.0
    d_delta1: float = 0.0

    FIELDS = ("x", "cal_e", "dx", "d2x", "d3x", "dth_x", "d_dth_x", "delta1", "d_delta1")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in self.FIELDS])


@dataclass
class PathRealization:
    """One path on its integration grid (grid includes every jump time;
    at a jump node the stored state is the post-jump one)."""

    grid: np.ndarray
    states: dict
    jumps: JumpRecord
    theta: float
    x0: float
    horizon: float
    step: float

    def terminal_state(self) -> VariationState:
        return VariationState(**{f: float(self.states[f][-1]) for f in VariationState.FIELDS})


def engine_coeffs(model: LevyModel, spec: PerturbationSpec, eps_trunc: float) -> dict:
    """Constants the integrator needs, derived from the truncated measure."""
    comp = compensator_integrals(model, spec, eps_trunc)
    return dict(drift_const=model.z_drift - comp["comp_drift"],
                comp_chi=comp["comp_chi"], eps_trunc=eps_trunc, **{
                    k: comp[k] for k in ("mass_rho", "mass_total", "var_dropped")})


def _rhs(theta: float, drift: DriftModel, drift_const: float, s: np.ndarray, out: np.ndarray):
    x, cal_e, dx, d2x, d3x, dth, ddth = s
    a_x = drift.a_x(theta, x)
    a_xx = drift.a_xx(theta, x)
    out[0] = drift.a(theta, x) + drift_const
    out[1] = a_x * cal_e
    out[2] = a_x * dx
    out[3] = a_xx * dx * dx + a_x * d2x
    out[4] = drift.a_xxx(theta, x) * dx ** 3 + 3.0 * a_xx * dx * d2x + a_x * d3x
    out[5] = a_x * dth + drift.a_th(theta, x)
    out[6] = a_xx * dx * dth + a_x * ddth + drift.a_xth(theta, x) * dx
    return out


def _rhs_density(theta: float, drift: DriftModel, drift_const: float, s: np.ndarray, out: np.ndarray):
    x, dx, d2x = s
    a_x = drift.a_x(theta, x)
    out[0] = drift.a(theta, x) + drift_const
    out[1] = a_x * dx
    out[2] = drift.a_xx(theta, x) * dx * dx + a_x * d2x
    return out


def _rhs_plain(theta: float, drift: DriftModel, drift_const: float, s: np.ndarray, out: np.ndarray):
    out[0] = drift.a(theta, s[0]) + drift_const
    return out


_STACKS = {"full": (7, _rhs), "density": (3, _rhs_density), "plain": (1, _rhs_plain)}


def _rk4(s, dt, theta, drift, drift_const, rhs, k1, k2, k3, k4, tmp):
    rhs(theta, drift, drift_const, s, k1)
    np.multiply(k1, 0.5 * dt, out=tmp); tmp += s
    rhs(theta, drift, drift_const, tmp, k2)
    np.multiply(k2, 0.5 * dt, out=tmp); tmp += s
    rhs(theta, drift, drift_const, tmp, k3)
    np.multiply(k3, dt, out=tmp); tmp += s
    rhs(theta, drift, drift_const, tmp, k4)
    k2 += k3
    k2 *= 2.0
    k2 += k1
    k2 += k4
    np.multiply(k2, dt / 6.0, out=tmp)
    s += tmp


def flow_step(state: VariationState, theta: float, dt: float, drift: DriftModel,
              comp: dict) -> VariationState:
    """Advance the stack by one RK4 step of length dt (no jump)."""
    s = state.as_array()[:7].reshape(7, 1)
    bufs = [np.empty_like(s) for _ in range(5)]
    _rk4(s, float(dt), theta, drift, comp["drift_const"], _rhs, *bufs)
    vals = {f: float(s[i, 0]) for i, f in enumerate(VariationState.FIELDS[:7])}
    return replace(state, delta1=state.delta1 - comp["comp_chi"] * dt, **vals)


def jump_update(state: VariationState, u: float, model: LevyModel,
                spec: PerturbationSpec) -> VariationState:
    """Apply a jump of amplitude u to the stack."""
    r = float(rho(u, spec))
    r1 = float(rho_d1(u, spec))
    r2 = float(rho_d2(u, spec))
    return replace(
        state,
        x=state.x + u,
        dx=state.dx + r,
        d2x=state.d2x + r * r1,
        d3x=state.d3x + r * (r1 * r1 + r * r2),
        delta1=state.delta1 + float(chi(u, model, spec)),
        d_delta1=state.d_delta1 + float(chi_d1(u, model, spec)) * r,
    )


def solve_path(drift: DriftModel, model: LevyModel, spec: PerturbationSpec, theta: float,
               x0: float, horizon: float, jumps: JumpRecord, comp: dict,
               step: float | None = None) -> PathRealization:
    """Reference single-path solver, recording every grid node.

    The grid walks in steps of at most `step` and lands exactly on each
    jump time; cheap enough for oracles and dumps, not for estimation
    (use solve_batch there).
    """
    theta = drift.check_theta(theta)
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    step = default_step(horizon) if step is None else float(step)
    state = VariationState(x=float(x0))
    times = [0.0]
    rows = {f: [getattr(state, f)] for f in VariationState.FIELDS}
    t = 0.0
    jtau = jumps.tau
    jamp = jumps.amp
    nxt = 0
    while t < horizon - 1e-15:
        t_event = jtau[nxt] if nxt < jtau.size and jtau[nxt] <= horizon else horizon
        target = min(t_event, t + step)
        dt = target - t
        if dt > 0:
            state = flow_step(state, theta, dt, drift, comp)
        t = target
        if t == t_event and t_event < horizon + 1e-15 and nxt < jtau.size:
            if jtau[nxt] <= horizon:
                state = jump_update(state, float(jamp[nxt]), model, spec)
                nxt += 1
        times.append(t)
        for f in VariationState.FIELDS:
            rows[f].append(getattr(state, f))
    return PathRealization(
        grid=np.asarray(times), states={f: np.asarray(v) for f, v in rows.items()},
        jumps=jumps, theta=theta, x0=float(x0), horizon=float(horizon), step=step)


def solve_batch(drift: DriftModel, model: LevyModel, spec: PerturbationSpec, theta: float,
                x0, horizon: float, tau: np.ndarray, amp: np.ndarray, comp: dict,
                step: float | None = None, stack: str = "full") -> dict:
    """Vectorised terminal states for padded jump arrays (tau, amp).

    tau rows are ascending with inf padding; amplitudes of padded slots
    must be zero.  x0 is a scalar or per-path array.  stack selects how
    much of the variation stack rides along: "full" (everything),
    "density" (x, dx, d2x, delta1 -- enough for the first density
    representation), or "plain" (x only).  Returns terminal arrays for
    the integrated components plus a finite-state mask 'ok'.
    """
    theta = drift.check_theta(theta)
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if stack not in _STACKS:
        raise ValueError(f"unknown stack {stack!r}; expected one of {sorted(_STACKS)}")
    step = default_step(horizon) if step is None else float(step)
    tau = np.atleast_2d(np.asarray(tau, dtype=float))
    amp = np.atleast_2d(np.asarray(amp, dtype=float))
    n = tau.shape[0]
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (n,)).copy()

    width, rhs = _STACKS[stack]
    s = np.zeros((width, n))
    s[0] = x0
    if stack == "full":
        s[1] = 1.0
    bufs = [np.empty_like(s) for _ in range(5)]

    # sentinel column so the per-path jump pointer can run off the end
    tau_s = np.hstack([tau, np.full((n, 1), np.inf)])
    amp_s = np.hstack([amp, np.zeros((n, 1))])
    rows = np.arange(n)
    ptr = np.zeros(n, dtype=np.int64)
    next_tau = tau_s[rows, ptr]
    t = np.zeros(n)
    drift_const = comp["drift_const"]
    max_iter = int(np.ceil(horizon / step)) + 2 * tau.shape[1] + 16

    for _ in range(max_iter):
        target = np.minimum(next_tau, horizon)
        gap = target - t
        if not np.any((gap > 0) | (next_tau <= horizon)):
            break
        full = gap <= step
        dt = np.where(full, np.maximum(gap, 0.0), step)
        _rk4(s, dt, theta, drift, drift_const, rhs, *bufs)
        t = np.where(full, target, t + step)
        hit = full & (next_tau <= horizon)
        if np.any(hit):
            u_j = np.where(hit, amp_s[rows, ptr], 0.0)
            s[0] += u_j
            if stack != "plain":
                r = rho(u_j, spec)
                r1 = rho_d1(u_j, spec)
                idx = 2 if stack == "full" else 1
                s[idx] += r
                s[idx + 1] += r * r1
                if stack == "full":
                    s[4] += r * (r1 * r1 + r * rho_d2(u_j, spec))
            ptr += hit
            next_tau = tau_s[rows, ptr]
    else:
        raise RuntimeError("path integrator failed to terminate; check jump times")

    active = np.isfinite(tau) & (tau <= horizon)
    amp_active = np.where(active, amp, 0.0)
    out = {"x": s[0]}
    if stack == "full":
        out.update(cal_e=s[1], dx=s[2], d2x=s[3], d3x=s[4], dth_x=s[5], d_dth_x=s[6])
    elif stack == "density":
        out.update(dx=s[1], d2x=s[2])
    if stack != "plain":
        out["delta1"] = chi(amp_active, model, spec).sum(axis=1) - horizon * comp["comp_chi"]
        if stack == "full":
            out["d_delta1"] = (chi_d1(amp_active, model, spec) * rho(amp_active, spec)).sum(axis=1)
    ok = np.ones(n, dtype=bool)
    for v in out.values():
        ok &= np.isfinite(v)
    out["ok"] = ok
    return out
