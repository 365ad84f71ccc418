"""Monte Carlo estimators built on weighted terminal pools.

A pool is the concatenated terminal output of solve_batch over fixed-size
chunks, each chunk driven by its own child stream keyed by (seed, labels,
chunk index).  Chunks may be computed on any number of worker threads;
because streams are keyed by chunk index and reductions happen on the
index-ordered concatenation in the caller's thread, every estimate is
bit-identical for any thread count.

Density of the terminal value at y is estimated two ways:

    rep 1:  p(y) =  E[xi  1{X > y}]           (y on the far side of x0)
           -p(y) =  E[xi  1{X <= y}]          (near side)
    rep 2:  p(y) =  E[xi2 (X - y)_+]

and the score at y by a kernel-weighted ratio  sum(xi1 K_h) / sum(K_h).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .drifts import DriftModel
from .levy import (JumpSampler, LevyModel, build_sampler, default_eps_trunc)
from .paths import engine_coeffs, solve_batch
from .perturbation import PerturbationSpec
from .rng import substream
from .weights import DX_FLOOR, WeightSet, compute_weights

__all__ = [
    "Engine", "MCEstimate", "sample_pool", "pool_weights",
    "estimate_density", "estimate_cdf", "estimate_score",
    "estimate_fisher_onestep", "kde_density", "normalization_integral",
    "silverman_bandwidth",
]

DEFAULT_CHUNK = 25_000
ESS_MIN = 30.0


@dataclass(frozen=True)
class Engine:
    """Everything measure-level that path solves need: the drift, the
    jump model, the deformation, and the truncation with its integrals."""

    drift: DriftModel
    model: LevyModel
    spec: PerturbationSpec
    eps_trunc: float
    comp: dict
    sampler: JumpSampler

    @classmethod
    def build(cls, drift: DriftModel, model: LevyModel, spec: PerturbationSpec,
              horizon: float, activity_target: float = 50.0,
              eps_trunc: float | None = None) -> "Engine":
        if eps_trunc is None:
            eps_trunc = default_eps_trunc(model, spec, horizon, activity_target)
        comp = engine_coeffs(model, spec, eps_trunc)
        sampler = build_sampler(model, spec, eps_trunc)
        return cls(drift=drift, model=model, spec=spec, eps_trunc=float(eps_trunc),
                   comp=comp, sampler=sampler)


@dataclass
class MCEstimate:
    value: float
    stderr: float
    n_used: int
    n_dropped: int = 0
    flags: dict = field(default_factory=dict)

    def zscore(self, target: float) -> float:
        return (self.value - target) / self.stderr if self.stderr > 0 else math.inf


def _chunk_ranges(n: int, chunk: int):
    return [(i, lo, min(lo + chunk, n)) for i, lo in enumerate(range(0, n, chunk))]


def sample_pool(engine: Engine, theta: float, x0, horizon: float, n_paths: int,
                seed: int, labels: tuple = (), *, stack: str = "full",
                step: float | None = None, chunk: int = DEFAULT_CHUNK,
                threads: int = 1) -> dict:
    """Simulate n_paths terminal stacks, chunked and optionally threaded.

    Returns concatenated terminal arrays (same keys as solve_batch).
    x0 may be a scalar or an array of per-path start points.
    """
    if n_paths <= 0:
        raise ValueError("n_paths must be positive")
    if chunk <= 0:
        raise ValueError("chunk must be positive")
    x0_arr = np.broadcast_to(np.asarray(x0, dtype=float), (n_paths,))
    ranges = _chunk_ranges(n_paths, chunk)

    def run(job):
        ci, lo, hi = job
        rng = substream(seed, *labels, ci)
        tau, amp = engine.sampler.sample(rng, horizon, hi - lo)
        return solve_batch(engine.drift, engine.model, engine.spec, theta,
                           x0_arr[lo:hi], horizon, tau, amp, engine.comp,
                           step=step, stack=stack)

    if threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, ranges))
    else:
        parts = [run(job) for job in ranges]
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def pool_weights(pool: dict, dx_floor: float = DX_FLOOR) -> WeightSet:
    return compute_weights(pool, dx_floor)


def _finite_mean(vals: np.ndarray, valid: np.ndarray, n_dropped: int,
                 flags: dict | None = None) -> MCEstimate:
    v = vals[valid]
    n = v.size
    if n < 2:
        return MCEstimate(value=math.nan, stderr=math.inf, n_used=n,
                          n_dropped=n_dropped, flags={"empty": True})
    return MCEstimate(value=float(v.mean()),
                      stderr=float(v.std(ddof=1) / math.sqrt(n)),
                      n_used=n, n_dropped=n_dropped, flags=flags or {})


def estimate_density(ws: WeightSet, ys, x0: float, rep: int = 1) -> list[MCEstimate]:
    """Density of the terminal value at each y; see module docstring."""
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    out = []
    if rep == 1:
        if ws.xi is None:
            raise ValueError("pool lacks xi; solve with stack='density' or 'full'")
        for y in ys:
            if y >= x0:
                vals = np.where(ws.x > y, ws.xi, 0.0)
            else:
                vals = -np.where(ws.x <= y, ws.xi, 0.0)
            out.append(_finite_mean(vals, ws.valid, ws.n_dropped, {"rep": 1}))
    elif rep == 2:
        if ws.xi2 is None:
            raise ValueError("pool lacks xi2; solve with stack='full'")
        for y in ys:
            vals = np.maximum(ws.x - y, 0.0) * ws.xi2
            out.append(_finite_mean(vals, ws.valid, ws.n_dropped, {"rep": 2}))
    else:
        raise ValueError("rep must be 1 or 2")
    return out


def estimate_cdf(ws: WeightSet, ys) -> list[MCEstimate]:
    """Plain Monte Carlo CDF of the terminal value (all paths count)."""
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    all_valid = np.isfinite(ws.x)
    return [_finite_mean((ws.x <= y).astype(float), all_valid, 0) for y in ys]


def silverman_bandwidth(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points for a bandwidth")
    return 1.06 * float(x.std(ddof=1)) * x.size ** (-0.2)


def estimate_score(ws: WeightSet, ys, bandwidth: float | None = None,
                   ess_min: float = ESS_MIN) -> list[MCEstimate]:
    """Kernel-weighted score at each y: sum(xi1 K_h)/sum(K_h) over valid
    paths, with a Gaussian kernel and Silverman bandwidth by default.
    Flags low effective sample size (ess < ess_min)."""
    if ws.xi1 is None:
        raise ValueError("pool lacks xi1; solve with stack='full'")
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    x = ws.x[ws.valid]
    xi1 = ws.xi1[ws.valid]
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    out = []
    for y in ys:
        k = np.exp(-0.5 * ((x - y) / h) ** 2)
        ksum = k.sum()
        kmax = k.max(initial=0.0)
        ess = ksum / kmax if kmax > 0 else 0.0
        flags = {"bandwidth": h, "ess": float(ess)}
        if ess < ess_min:
            flags["ess_low"] = True
        if ksum <= 0:
            out.append(MCEstimate(math.nan, math.inf, 0, ws.n_dropped, flags))
            continue
        g = float((k * xi1).sum() / ksum)
        se = float(np.sqrt((k ** 2 * (xi1 - g) ** 2).sum()) / ksum)
        out.append(MCEstimate(g, se, int(x.size), ws.n_dropped, flags))
    return out


def estimate_fisher_onestep(ws: WeightSet, y_draws: np.ndarray,
                            bandwidth: float | None = None,
                            y_chunk: int = 64) -> MCEstimate:
    """One-step Fisher information: mean of squared scores over observation
    draws y_draws, every score read off the same weighted pool."""
    y_draws = np.asarray(y_draws, dtype=float)
    if y_draws.ndim != 1 or y_draws.size == 0:
        raise ValueError("y_draws must be a 1-d array of observation points")
    gs = np.empty(y_draws.size)
    n_low = 0
    for lo in range(0, y_draws.size, y_chunk):
        ests = estimate_score(ws, y_draws[lo:lo + y_chunk], bandwidth=bandwidth)
        for j, e in enumerate(ests):
            gs[lo + j] = e.value
            n_low += bool(e.flags.get("ess_low"))
    g2 = gs ** 2
    m = g2.size
    est = MCEstimate(value=float(g2.mean()),
                     stderr=float(g2.std(ddof=1) / math.sqrt(m)) if m > 1 else math.inf,
                     n_used=m, n_dropped=ws.n_dropped,
                     flags={"ess_low_count": n_low, "scores": gs})
    return est


def kde_density(samples: np.ndarray, ys, bandwidth: float | None = None) -> list[MCEstimate]:
    """Gaussian KDE of plainly simulated terminal values (reference only)."""
    x = np.asarray(samples, dtype=float)
    x = x[np.isfinite(x)]
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    out = []
    c = 1.0 / (h * math.sqrt(2.0 * math.pi))
    for y in ys:
        vals = c * np.exp(-0.5 * ((x - y) / h) ** 2)
        out.append(_finite_mean(vals, np.ones(x.size, dtype=bool), 0,
                                {"bandwidth": h}))
    return out


def normalization_integral(ws: WeightSet, x0: float, lo: float, hi: float,
                           n_grid: int = 201) -> MCEstimate:
    """Trapezoid integral of the rep-1 density over [lo, hi], folded into a
    single per-path average so the standard error is honest."""
    if ws.xi is None:
        raise ValueError("pool lacks xi")
    if not lo < hi:
        raise ValueError("need lo < hi")
    grid = np.linspace(lo, hi, n_grid)
    w = np.full(n_grid, (hi - lo) / (n_grid - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    upper = grid >= x0
    gu, wu = grid[upper], w[upper]
    gl, wl = grid[~upper], w[~upper]
    cum_u = np.concatenate([[0.0], np.cumsum(wu)])
    cum_l = np.concatenate([[0.0], np.cumsum(wl)])
    x = ws.x
    # sum_k wu_k 1{x > gu_k}: weight of upper grid points strictly below x
    per_path = cum_u[np.searchsorted(gu, x, side="left")]
    # minus sum_k wl_k 1{x <= gl_k}: lower grid points at or above x
    per_path = per_path - (cum_l[-1] - cum_l[np.searchsorted(gl, x, side="left")])
    vals = per_path * ws.xi
    return _finite_mean(vals, ws.valid, ws.n_dropped)
