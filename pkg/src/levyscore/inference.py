"""Simulated-likelihood inference on discretely observed paths.

The likelihood of a transition x -> y over one observation interval is
the weighted-pool density estimate at y started from x.  All pools are
keyed by (seed, labels, chunk index) with theta-independent labels, so
the same jump streams drive every theta: the simulated likelihood
surface is deterministic in theta (common random numbers), and a scalar
search on it is meaningful.

Monte Carlo transitions are batched: the pool for a whole observation
set is one big per-path-x0 solve, transition j owning the contiguous
block [j*n_mc, (j+1)*n_mc).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimators import (DEFAULT_CHUNK, Engine, MCEstimate, estimate_score,
                         pool_weights, sample_pool, silverman_bandwidth)
from .rng import substream
from .weights import compute_weights

__all__ = [
    "ObservationSet", "TransitionLikelihood", "MLEReport",
    "simulate_observations", "transition_densities", "log_likelihood",
    "mle", "fisher_info_experiment", "cramer_rao_report", "crlb_experiment",
]

P_FLOOR = 1e-10
FLAT_RANGE = 1e-3   # log-likelihood range below which the surface is flagged flat


@dataclass
class ObservationSet:
    """A discretely observed chain: x[j] at times j*delta, j = 0..n."""

    x: np.ndarray
    delta: float
    theta_true: float
    seed: int

    @property
    def n_obs(self) -> int:
        return self.x.size - 1

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return self.x[:-1], self.x[1:]


def simulate_observations(engine: Engine, theta: float, x0: float, n_obs: int,
                          delta: float, seed: int, step: float | None = None,
                          labels: tuple = ("obs",)) -> ObservationSet:
    """Simulate the chain sequentially (each transition one plain path)."""
    if n_obs <= 0:
        raise ValueError("n_obs must be positive")
    xs = np.empty(n_obs + 1)
    xs[0] = x0
    cur = float(x0)
    from .paths import solve_batch
    for j in range(n_obs):
        rng = substream(seed, *labels, j)
        tau, amp = engine.sampler.sample(rng, delta, 1)
        out = solve_batch(engine.drift, engine.model, engine.spec, theta, cur,
                          delta, tau, amp, engine.comp, step=step, stack="plain")
        cur = float(out["x"][0])
        xs[j + 1] = cur
    return ObservationSet(x=xs, delta=float(delta), theta_true=float(theta),
                          seed=int(seed))


@dataclass
class TransitionLikelihood:
    p: np.ndarray
    stderr: np.ndarray
    n_floored: int
    n_dropped: int
    loglik: float


def transition_densities(engine: Engine, x_from: np.ndarray, x_to: np.ndarray,
                         theta: float, delta: float, n_mc: int, seed: int,
                         labels: tuple = ("mle-pool",), step: float | None = None,
                         threads: int = 1, p_floor: float = P_FLOOR,
                         stack: str = "density") -> TransitionLikelihood:
    """Density estimates for many transitions out of one batched pool."""
    x_from = np.asarray(x_from, dtype=float)
    x_to = np.asarray(x_to, dtype=float)
    if x_from.shape != x_to.shape or x_from.ndim != 1:
        raise ValueError("x_from and x_to must be matching 1-d arrays")
    m = x_from.size
    x0_vec = np.repeat(x_from, n_mc)
    pool = sample_pool(engine, theta, x0_vec, delta, m * n_mc, seed, labels,
                       stack=stack, step=step, threads=threads)
    ws = compute_weights(pool)
    p = np.empty(m)
    se = np.empty(m)
    for j in range(m):
        sl = slice(j * n_mc, (j + 1) * n_mc)
        x, xi, valid = ws.x[sl], ws.xi[sl], ws.valid[sl]
        y = x_to[j]
        if y >= x_from[j]:
            vals = np.where(x > y, xi, 0.0)[valid]
        else:
            vals = -np.where(x <= y, xi, 0.0)[valid]
        p[j] = vals.mean()
        se[j] = vals.std(ddof=1) / math.sqrt(vals.size)
    floored = int(np.count_nonzero(p < p_floor))
    loglik = float(np.log(np.maximum(p, p_floor)).sum())
    return TransitionLikelihood(p=p, stderr=se, n_floored=floored,
                                n_dropped=ws.n_dropped, loglik=loglik)


def log_likelihood(engine: Engine, obs: ObservationSet, theta: float, n_mc: int,
                   seed: int, step: float | None = None, threads: int = 1,
                   p_floor: float = P_FLOOR) -> TransitionLikelihood:
    x_from, x_to = obs.pairs()
    return transition_densities(engine, x_from, x_to, theta, obs.delta, n_mc,
                                seed, step=step, threads=threads, p_floor=p_floor)


@dataclass
class MLEReport:
    theta_hat: float
    loglik: float
    n_eval: int
    curve: list = field(default_factory=list)   # (theta, loglik) pairs, eval order
    flags: dict = field(default_factory=dict)


def mle(engine: Engine, obs: ObservationSet, n_mc: int, seed: int,
        bracket: tuple[float, float] | None = None, tol: float = 1.5e-3,
        n_scan: int = 7, step: float | None = None, threads: int = 1,
        p_floor: float = P_FLOOR) -> MLEReport:
    """Maximise the common-random-numbers likelihood surface.

    Coarse scan to localise, then golden-section refinement.  The surface
    is deterministic given (seed, n_mc), so the optimum is reproducible.
    Flags a flat surface (theta unidentifiable) instead of pretending the
    midpoint is an estimate.
    """
    lo, hi = bracket if bracket is not None else (engine.drift.theta_lo,
                                                  engine.drift.theta_hi)
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    curve = []

    def L(th):
        r = log_likelihood(engine, obs, th, n_mc, seed, step=step,
                           threads=threads, p_floor=p_floor)
        curve.append((float(th), r.loglik))
        return r.loglik

    ts = np.linspace(lo, hi, n_scan)
    Ls = np.array([L(t) for t in ts])
    if Ls.max() - Ls.min() < FLAT_RANGE:
        mid = 0.5 * (lo + hi)
        return MLEReport(theta_hat=mid, loglik=float(Ls.mean()), n_eval=len(curve),
                         curve=curve, flags={"flat_likelihood": True})
    i = int(np.argmax(Ls))
    a = ts[max(i - 1, 0)]
    b = ts[min(i + 1, n_scan - 1)]

    gr = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc, fd = L(c), L(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = L(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = L(d)
    th_hat = 0.5 * (a + b)
    L_hat = max(fc, fd)
    flags = {}
    if th_hat - lo < 2 * tol or hi - th_hat < 2 * tol:
        flags["at_bracket_edge"] = True
    return MLEReport(theta_hat=float(th_hat), loglik=float(L_hat),
                     n_eval=len(curve), curve=curve, flags=flags)


def fisher_info_experiment(engine: Engine, theta: float, x0: float, n_obs: int,
                           delta: float, n_outer: int, n_mc: int, seed: int,
                           step: float | None = None, threads: int = 1,
                           bandwidth: float | None = None) -> dict:
    """Fisher information of the whole observation experiment.

    Simulates n_outer independent chains at theta, estimates the
    transition score at every observed transition from a batched
    full-stack pool (one pool per chain; transition blocks share
    nothing), and averages sum-of-squared-scores across chains.
    """
    per_chain = np.empty(n_outer)
    ess_low = 0
    for i in range(n_outer):
        obs = simulate_observations(engine, theta, x0, n_obs, delta, seed,
                                    step=step, labels=("fisher-chain", i))
        x_from, x_to = obs.pairs()
        x0_vec = np.repeat(x_from, n_mc)
        pool = sample_pool(engine, theta, x0_vec, delta, n_obs * n_mc, seed,
                           ("fisher-pool", i), stack="full", step=step,
                           threads=threads)
        ws = compute_weights(pool)
        total = 0.0
        for j in range(n_obs):
            sl = slice(j * n_mc, (j + 1) * n_mc)
            sub = type(ws)(x=ws.x[sl], valid=ws.valid[sl], dx_floor=ws.dx_floor,
                           xi=ws.xi[sl], xi1=ws.xi1[sl])
            est = estimate_score(sub, [x_to[j]], bandwidth=bandwidth)[0]
            ess_low += bool(est.flags.get("ess_low"))
            total += est.value ** 2
        per_chain[i] = total
    info = float(per_chain.mean())
    se = float(per_chain.std(ddof=1) / math.sqrt(n_outer)) if n_outer > 1 else math.inf
    return {"info": info, "stderr": se, "per_chain": per_chain,
            "n_outer": n_outer, "n_mc": n_mc, "ess_low_count": int(ess_low)}


def crlb_experiment(engine: Engine, theta0: float, x0: float, n_obs: int,
                    delta: float, n_mc: int, seed: int, n_replicas: int,
                    n_bias_pairs: int = 8, dtheta_bias: float = 0.15,
                    n_outer: int = 24, n_mc_fisher: int = 3000,
                    tol: float = 8e-3, n_scan: int = 7,
                    step: float | None = None, threads: int = 1,
                    p_floor: float = P_FLOOR) -> dict:
    """Replicated-MLE information-bound experiment.

    n_replicas independent chains at theta0 are each fit by MLE; the bias
    slope d' is a common-random-numbers finite difference (each pair of
    fits at theta0 +- dtheta_bias reuses one observation stream and one
    Monte Carlo stream, so the difference cancels shared noise); the
    experiment information comes from fisher_info_experiment.
    """
    def one_mle(theta, obs_labels, i):
        obs = simulate_observations(engine, theta, x0, n_obs, delta, seed,
                                    step=step, labels=obs_labels)
        rep = mle(engine, obs, n_mc, seed + i + 1, tol=tol, n_scan=n_scan,
                  step=step, threads=threads, p_floor=p_floor)
        return rep

    reps = [one_mle(theta0, ("crlb", "obs", i), i) for i in range(n_replicas)]
    hats = np.array([r.theta_hat for r in reps])
    edge_count = sum(bool(r.flags.get("at_bracket_edge")) for r in reps)

    slope, slope_se = 0.0, 0.0
    pair = np.zeros(0)
    if n_bias_pairs > 0:
        hi = np.array([one_mle(theta0 + dtheta_bias, ("bias", "obs", i), i).theta_hat
                       for i in range(n_bias_pairs)])
        lo = np.array([one_mle(theta0 - dtheta_bias, ("bias", "obs", i), i).theta_hat
                       for i in range(n_bias_pairs)])
        pair = (hi - lo) / (2 * dtheta_bias) - 1.0
        slope = float(pair.mean())
        if pair.size > 1:
            slope_se = float(pair.std(ddof=1) / math.sqrt(pair.size))

    fi = fisher_info_experiment(engine, theta0, x0, n_obs, delta, n_outer,
                                n_mc_fisher, seed, step=step, threads=threads)
    report = cramer_rao_report(theta0, hats, fi["info"], bias_slope=slope,
                               bias_slope_stderr=slope_se,
                               info_stderr=fi["stderr"])
    report.update(theta_hats=hats, bias_pair_slopes=pair,
                  edge_count=int(edge_count),
                  fisher={k: fi[k] for k in ("info", "stderr", "n_outer",
                                             "n_mc", "ess_low_count")})
    return report


def cramer_rao_report(theta_true: float, theta_hats: np.ndarray, info: float,
                      bias_slope: float = 0.0, bias_slope_stderr: float = 0.0,
                      info_stderr: float = 0.0) -> dict:
    """Compare replica MSE against the information bound for a biased
    estimator:  MSE >= (1 + d')^2 / I + d^2  with d the bias at
    theta_true and d' its slope."""
    th = np.asarray(theta_hats, dtype=float)
    n = th.size
    if n < 2:
        raise ValueError("need at least two replicas")
    err = th - theta_true
    mse = float(np.mean(err ** 2))
    mse_se = float(np.std(err ** 2, ddof=1) / math.sqrt(n))
    bias = float(err.mean())
    bias_se = float(err.std(ddof=1) / math.sqrt(n))
    bound = (1.0 + bias_slope) ** 2 / info + bias ** 2
    z = (mse - bound) / mse_se if mse_se > 0 else math.inf
    return {
        "n_replicas": n, "mse": mse, "mse_stderr": mse_se,
        "bias": bias, "bias_stderr": bias_se,
        "bias_slope": bias_slope, "bias_slope_stderr": bias_slope_stderr,
        "info": info, "info_stderr": info_stderr,
        "bound": float(bound), "z_mse_vs_bound": float(z),
        "mse_over_bound": float(mse / bound),
    }
