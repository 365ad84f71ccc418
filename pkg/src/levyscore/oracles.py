"""Independent cross-checks for the path engine and the estimators.

Everything here recomputes a target quantity by a route that shares as
little code as possible with the production path:

* finite-difference stencils in the deformation size c and in theta,
  run on the same jump sample and the same time grid so discretisation
  error cancels in the differences;
* a quadrature ("variation of constants") evaluator that rebuilds every
  variation from running integrals instead of the direct ODE stack;
* pairing identities: smooth-function duality for the xi weight, and the
  exponential-tilt mean, change-of-variables, and linearisation checks;
* a finite-difference + quadrature Fisher information oracle.
"""

from __future__ import annotations

import math

import numpy as np

from .estimators import Engine, estimate_density, sample_pool, pool_weights
from .perturbation import q_flow, rho, rho_d1, rho_d2
from .levy import girsanov_log_density
from .paths import default_step, solve_batch
from .rng import substream
from .weights import WeightSet

__all__ = [
    "perturb_jumps", "fd_variation_check", "solve_batch_integral",
    "integral_formula_check", "duality_check", "girsanov_mc_check",
    "fisher_fd_quadrature", "DUALITY_FUNCS",
]


def perturb_jumps(amp: np.ndarray, c: float, spec) -> np.ndarray:
    """Map every jump amplitude through the deformation flow Q_c.

    Padded zero amplitudes and amplitudes beyond the deformation support
    are fixed points, so padding survives untouched.
    """
    amp = np.asarray(amp, dtype=float)
    return q_flow(amp, c, spec)


def _terminal_x(engine: Engine, theta, x0, horizon, tau, amp, step):
    out = solve_batch(engine.drift, engine.model, engine.spec, theta, x0, horizon,
                      tau, amp, engine.comp, step=step, stack="plain")
    return out["x"]


def fd_variation_check(engine: Engine, theta: float, x0: float, horizon: float,
                       n_paths: int, seed: int, c: float = 1e-3,
                       dtheta: float = 1e-4, step: float | None = None) -> dict:
    """Compare every stack variation against stencils of the plain terminal
    value under deformed amplitudes / shifted theta (same jumps, same grid).

    Returns max absolute stencil-vs-stack errors keyed dx/d2x/d3x/dth_x/
    d_dth_x, plus the per-path base stack.
    """
    rng = substream(seed, "fd-variation")
    tau, amp = engine.sampler.sample(rng, horizon, n_paths)
    step = default_step(horizon) if step is None else float(step)

    base = solve_batch(engine.drift, engine.model, engine.spec, theta, x0, horizon,
                       tau, amp, engine.comp, step=step, stack="full")

    xs = {}
    for k in (-2, -1, 1, 2):
        amp_k = perturb_jumps(amp, k * c, engine.spec)
        xs[k] = _terminal_x(engine, theta, x0, horizon, tau, amp_k, step)
    x0s = base["x"]

    dx_fd = (xs[1] - xs[-1]) / (2 * c)
    d2x_fd = (xs[1] - 2 * x0s + xs[-1]) / c ** 2
    d3x_fd = (xs[2] - 2 * xs[1] + 2 * xs[-1] - xs[-2]) / (2 * c ** 3)

    x_thp = _terminal_x(engine, theta + dtheta, x0, horizon, tau, amp, step)
    x_thm = _terminal_x(engine, theta - dtheta, x0, horizon, tau, amp, step)
    dth_fd = (x_thp - x_thm) / (2 * dtheta)

    amp_p = perturb_jumps(amp, c, engine.spec)
    amp_m = perturb_jumps(amp, -c, engine.spec)
    mixed_fd = ((_terminal_x(engine, theta + dtheta, x0, horizon, tau, amp_p, step)
                 - _terminal_x(engine, theta + dtheta, x0, horizon, tau, amp_m, step)
                 - _terminal_x(engine, theta - dtheta, x0, horizon, tau, amp_p, step)
                 + _terminal_x(engine, theta - dtheta, x0, horizon, tau, amp_m, step))
                / (4 * c * dtheta))

    def sup(a, b):
        return float(np.max(np.abs(a - b)))

    return {
        "n_paths": n_paths, "c": c, "dtheta": dtheta, "step": step,
        "dx": sup(dx_fd, base["dx"]),
        "d2x": sup(d2x_fd, base["d2x"]),
        "d3x": sup(d3x_fd, base["d3x"]),
        "dth_x": sup(dth_fd, base["dth_x"]),
        "d_dth_x": sup(mixed_fd, base["d_dth_x"]),
        "base": base,
    }


def _rk4_local(s, dt, rhs, k1, k2, k3, k4, tmp):
    rhs(s, k1)
    np.multiply(k1, 0.5 * dt, out=tmp); tmp += s
    rhs(tmp, k2)
    np.multiply(k2, 0.5 * dt, out=tmp); tmp += s
    rhs(tmp, k3)
    np.multiply(k3, dt, out=tmp); tmp += s
    rhs(tmp, k4)
    k2 += k3
    k2 *= 2.0
    k2 += k1
    k2 += k4
    np.multiply(k2, dt / 6.0, out=tmp)
    s += tmp


def solve_batch_integral(engine: Engine, theta: float, x0, horizon: float,
                         tau: np.ndarray, amp: np.ndarray,
                         step: float | None = None) -> dict:
    """Rebuild the terminal variations from running-integral formulas.

    Writes each variation as the flow derivative times a quadrature state:
    with E the flow derivative and A/G/S3 the jump aggregates

        DX    = E A
        D2X   = E (P + G),   P' = a_xx E A^2
        D3X   = E (R + S3),  R' = a_xxx E^2 A^3 + 3 a_xx E A (P + G)
        dThX  = E H,         H' = a_th / E
        DdThX = E M,         M' = a_xx E A H + a_xth A

    and at a jump of size u: A += rho/E, G += rho rho'/E,
    S3 += rho (rho'^2 + rho rho'')/E.  Entirely separate bookkeeping from
    the direct stack, so agreement is a real consistency check.
    """
    drift, model, spec, comp = engine.drift, engine.model, engine.spec, engine.comp
    theta = drift.check_theta(theta)
    step = default_step(horizon) if step is None else float(step)
    tau = np.atleast_2d(np.asarray(tau, dtype=float))
    amp = np.atleast_2d(np.asarray(amp, dtype=float))
    n = tau.shape[0]
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (n,)).copy()
    dc = comp["drift_const"]

    # rows: x, E, A, P, G, H, M, R, S3
    s = np.zeros((9, n))
    s[0] = x0
    s[1] = 1.0
    bufs = [np.empty_like(s) for _ in range(5)]

    def rhs(state, out):
        x, e, a_, p, g, h, m, r_, s3 = state
        ax = drift.a_x(theta, x)
        axx = drift.a_xx(theta, x)
        out[0] = drift.a(theta, x) + dc
        out[1] = ax * e
        out[2] = 0.0
        out[3] = axx * e * a_ * a_
        out[4] = 0.0
        out[5] = drift.a_th(theta, x) / e
        out[6] = axx * e * a_ * h + drift.a_xth(theta, x) * a_
        out[7] = drift.a_xxx(theta, x) * e * e * a_ ** 3 + 3.0 * axx * e * a_ * (p + g)
        out[8] = 0.0
        return out

    tau_s = np.hstack([tau, np.full((n, 1), np.inf)])
    amp_s = np.hstack([amp, np.zeros((n, 1))])
    rows = np.arange(n)
    ptr = np.zeros(n, dtype=np.int64)
    next_tau = tau_s[rows, ptr]
    t = np.zeros(n)
    max_iter = int(np.ceil(horizon / step)) + 2 * tau.shape[1] + 16

    for _ in range(max_iter):
        target = np.minimum(next_tau, horizon)
        gap = target - t
        if not np.any((gap > 0) | (next_tau <= horizon)):
            break
        full = gap <= step
        dt = np.where(full, np.maximum(gap, 0.0), step)
        _rk4_local(s, dt, rhs, *bufs)
        t = np.where(full, target, t + step)
        hit = full & (next_tau <= horizon)
        if np.any(hit):
            u_j = np.where(hit, amp_s[rows, ptr], 0.0)
            einv = 1.0 / s[1]
            r = rho(u_j, spec)
            r1 = rho_d1(u_j, spec)
            s[0] += u_j
            s[2] += einv * r
            s[4] += einv * r * r1
            s[8] += einv * r * (r1 * r1 + r * rho_d2(u_j, spec))
            ptr += hit
            next_tau = tau_s[rows, ptr]
    else:
        raise RuntimeError("integral-formula evaluator failed to terminate")

    e = s[1]
    return {
        "x": s[0], "cal_e": e, "dx": e * s[2], "d2x": e * (s[3] + s[4]),
        "d3x": e * (s[7] + s[8]), "dth_x": e * s[5], "d_dth_x": e * s[6],
    }


def integral_formula_check(engine: Engine, theta: float, x0: float, horizon: float,
                           n_paths: int, seed: int, step: float | None = None) -> dict:
    """Max relative disagreement between the direct stack and the
    running-integral evaluator, per component."""
    rng = substream(seed, "integral-formula")
    tau, amp = engine.sampler.sample(rng, horizon, n_paths)
    direct = solve_batch(engine.drift, engine.model, engine.spec, theta, x0, horizon,
                         tau, amp, engine.comp, step=step, stack="full")
    integral = solve_batch_integral(engine, theta, x0, horizon, tau, amp, step=step)
    report = {"n_paths": n_paths}
    for k in ("x", "cal_e", "dx", "d2x", "d3x", "dth_x", "d_dth_x"):
        a, b = direct[k], integral[k]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
        report[k] = float(np.max(np.abs(a - b) / denom))
    return report


DUALITY_FUNCS = (
    ("sin", np.sin, np.cos),
    ("tanh", np.tanh, lambda x: 1.0 / np.cosh(x) ** 2),
    ("gauss_x", lambda x: x * np.exp(-0.5 * x ** 2),
     lambda x: (1.0 - x ** 2) * np.exp(-0.5 * x ** 2)),
)


def duality_check(ws: WeightSet, funcs=DUALITY_FUNCS) -> dict:
    """Pairing identity E[f'(X)] = E[f(X) xi] for smooth bounded f, as a
    paired z-score per test function."""
    if ws.xi is None:
        raise ValueError("pool lacks xi")
    x = ws.x[ws.valid]
    xi = ws.xi[ws.valid]
    out = {}
    for name, f, fprime in funcs:
        d = fprime(x) - f(x) * xi
        se = d.std(ddof=1) / math.sqrt(d.size)
        out[name] = {"diff": float(d.mean()), "stderr": float(se),
                     "z": float(d.mean() / se)}
    return out


def score_duality_check(engine: Engine, theta: float, x0: float, horizon: float,
                        n_paths: int, seed: int, dtheta: float = 1e-2,
                        step: float | None = None, funcs=DUALITY_FUNCS,
                        threads: int = 1) -> dict:
    """Pairing identity for the parameter weight: E[f(X) xi1] equals the
    theta-derivative of E[f(X)], the latter taken as a common-stream
    finite difference.  One z-score per test function."""
    pool = sample_pool(engine, theta, x0, horizon, n_paths, seed,
                       ("score-duality", "w"), step=step, threads=threads)
    ws = pool_weights(pool)
    xp = sample_pool(engine, theta + dtheta, x0, horizon, n_paths, seed,
                     ("score-duality", "fd"), stack="plain", step=step,
                     threads=threads)["x"]
    xm = sample_pool(engine, theta - dtheta, x0, horizon, n_paths, seed,
                     ("score-duality", "fd"), stack="plain", step=step,
                     threads=threads)["x"]
    out = {}
    for name, f, _ in funcs:
        lhs = (f(ws.x) * ws.xi1)[ws.valid]
        fd = (f(xp) - f(xm)) / (2 * dtheta)
        se = math.hypot(lhs.std(ddof=1) / math.sqrt(lhs.size),
                        fd.std(ddof=1) / math.sqrt(fd.size))
        diff = float(lhs.mean() - fd.mean())
        out[name] = {"diff": diff, "stderr": float(se), "z": float(diff / se)}
    return out


def girsanov_mc_check(engine: Engine, theta: float, x0: float, horizon: float,
                      n_paths: int, seed: int, c: float, c_lin: float = 1e-4,
                      step: float | None = None, f=np.tanh) -> dict:
    """Exponential-tilt checks on one jump sample:

    * tilt mean:      E[kappa_c] = 1
    * change of vars: E[kappa_c f(X(amp))] = E[f(X(Q_c amp))]  (paired)
    * linearisation:  corr((kappa_{c_lin}-1)/c_lin, delta1) ~ 1
    """
    rng = substream(seed, "girsanov")
    tau, amp = engine.sampler.sample(rng, horizon, n_paths)
    log_k = girsanov_log_density(tau, amp, c, horizon, engine.model, engine.spec,
                                 engine.eps_trunc)
    kap = np.exp(log_k)
    se_k = kap.std(ddof=1) / math.sqrt(n_paths)
    z_kappa = (kap.mean() - 1.0) / se_k

    base = solve_batch(engine.drift, engine.model, engine.spec, theta, x0, horizon,
                       tau, amp, engine.comp, step=step, stack="density")
    pert_amp = perturb_jumps(amp, c, engine.spec)
    pert = solve_batch(engine.drift, engine.model, engine.spec, theta, x0, horizon,
                       tau, pert_amp, engine.comp, step=step, stack="plain")
    d = kap * f(base["x"]) - f(pert["x"])
    se_d = d.std(ddof=1) / math.sqrt(n_paths)
    z_cov = d.mean() / se_d

    log_k_lin = girsanov_log_density(tau, amp, c_lin, horizon, engine.model,
                                     engine.spec, engine.eps_trunc)
    lin = np.expm1(log_k_lin) / c_lin
    corr = float(np.corrcoef(lin, base["delta1"])[0, 1])
    return {
        "kappa_mean": float(kap.mean()), "kappa_stderr": float(se_k),
        "z_kappa": float(z_kappa), "z_change_of_vars": float(z_cov),
        "corr_linearisation": corr, "c": c, "c_lin": c_lin,
    }


def fisher_fd_quadrature(engine: Engine, theta: float, x0: float, horizon: float,
                         n_paths: int, seed: int, dtheta: float = 1e-2,
                         n_grid: int = 161, step: float | None = None,
                         threads: int = 1) -> dict:
    """Fisher information oracle: finite differences of the density curve
    in theta (common jump streams across theta) integrated by trapezoid:

        I(theta) ~= sum_k w_k (p(y_k;theta+d) - p(y_k;theta-d))^2
                              / (2 d)^2 / p(y_k;theta)

    restricted to grid points where the centre density estimate is
    signal-dominated; reports the probability mass actually covered.
    """
    labels = ("fisher-oracle",)
    pools = {}
    for tag, th in (("m", theta - dtheta), ("0", theta), ("p", theta + dtheta)):
        pool = sample_pool(engine, th, x0, horizon, n_paths, seed, labels,
                           stack="density", step=step, threads=threads)
        pools[tag] = pool_weights(pool)
    xs = pools["0"].x[pools["0"].valid]
    lo, hi = np.quantile(xs, [0.002, 0.998])
    grid = np.linspace(lo, hi, n_grid)
    w = np.full(n_grid, (hi - lo) / (n_grid - 1))
    w[0] *= 0.5
    w[-1] *= 0.5

    dens = {tag: estimate_density(pools[tag], grid, x0, rep=1) for tag in pools}
    p0 = np.array([e.value for e in dens["0"]])
    p0_se = np.array([e.stderr for e in dens["0"]])
    dp = (np.array([e.value for e in dens["p"]])
          - np.array([e.value for e in dens["m"]])) / (2 * dtheta)
    keep = p0 > 10.0 * p0_se
    info = float(np.sum(w[keep] * dp[keep] ** 2 / p0[keep]))
    return {
        "info": info, "grid": grid, "keep": keep,
        "mass_covered": float(np.sum(w[keep] * p0[keep])),
        "dtheta": dtheta, "n_paths": n_paths,
    }
