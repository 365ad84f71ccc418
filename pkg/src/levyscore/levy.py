"""Jump measures: densities, sampling, compensators, reweighting.

A model is a Levy measure mu(du) = sigma(u) du carrying infinite
activity at zero, together with the constant drift of the driving
process.  Simulation truncates jumps below eps_trunc and compensates
the removed drift exactly; every integral here is taken against the
truncated measure so that simulated paths and analytic reweighting
refer to the same process.

The deformation of amplitudes u -> Q_c(u) maps mu to an equivalent
measure with density m_c against mu; kappa_c, the exponential
martingale built from m_c, reweights expectations under the deformed
jumps back to the base measure.  Its c-derivative at zero is the
compensated integral of chi = -(sigma * rho)' / sigma.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .perturbation import PerturbationSpec, q_flow, q_flow_with_jacobian, rho, rho_d1, rho_d2
from .quadrature import integrate

__all__ = [
    "LevyModel", "JumpRecord", "JumpSampler", "tempered_stable", "make_model",
    "chi", "chi_d1", "compensator_integrals", "default_eps_trunc",
    "build_sampler", "girsanov_log_density", "check_assumption_h", "MODEL_REGISTRY",
]


@dataclass(frozen=True)
class LevyModel:
    """Levy measure with a smooth density and a driving drift.

    sigma and its two derivatives must be vectorised and valid for
    0 < |u| <= u_tail_cut on the supported sides; mass beyond
    u_tail_cut must be negligible.  tail_moment_order is the kappa for
    which integral |u|^(2+kappa) mu(du) over |u|>=1 is finite.
    """

    name: str
    sigma: Callable
    sigma_d1: Callable
    sigma_d2: Callable
    z_drift: float = 0.0
    tail_moment_order: float = 1.0
    u_tail_cut: float = 50.0
    sides: tuple = (-1.0, 1.0)
    params: dict = field(default_factory=dict)

    def support_mask(self, u: np.ndarray) -> np.ndarray:
        m = np.zeros(np.shape(u), dtype=bool)
        if 1.0 in self.sides:
            m |= u > 0
        if -1.0 in self.sides:
            m |= u < 0
        return m


@dataclass(frozen=True)
class JumpRecord:
    """Jumps of one path: times and amplitudes, times ascending."""

    tau: np.ndarray
    amp: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        amp = np.asarray(self.amp, dtype=float)
        if tau.shape != amp.shape or tau.ndim != 1:
            raise ValueError("tau and amp must be 1-d arrays of equal length")
        if tau.size and np.any(np.diff(tau) < 0):
            raise ValueError("jump times must be non-decreasing")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "amp", amp)


def tempered_stable(alpha: float, lambda_plus: float = 1.0, lambda_minus: float | None = None,
                    scale_plus: float = 1.0, scale_minus: float | None = None,
                    one_sided: bool = False, z_drift: float = 0.0) -> LevyModel:
    """sigma(u) = scale * exp(-lambda |u|) |u|^(-1-alpha) per side."""
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    lam_m = lambda_plus if lambda_minus is None else lambda_minus
    sc_m = scale_plus if scale_minus is None else scale_minus
    if min(lambda_plus, lam_m) <= 0 or min(scale_plus, sc_m) <= 0:
        raise ValueError("tempering rates and scales must be positive")

    def _side(u):
        pos = u > 0
        return np.where(pos, scale_plus, sc_m), np.where(pos, lambda_plus, lam_m)

    def sigma(u):
        u = np.asarray(u, dtype=float)
        sc, lam = _side(u)
        au = np.abs(u)
        return sc * np.exp(-lam * au) * au ** (-1.0 - alpha)

    def _dlog(u):
        # d/du log sigma = -lambda sign(u) - (1+alpha)/u
        _, lam = _side(u)
        return -lam * np.sign(u) - (1.0 + alpha) / u

    def sigma_d1(u):
        u = np.asarray(u, dtype=float)
        return sigma(u) * _dlog(u)

    def sigma_d2(u):
        u = np.asarray(u, dtype=float)
        return sigma(u) * (_dlog(u) ** 2 + (1.0 + alpha) / (u * u))

    sides = (1.0,) if one_sided else (-1.0, 1.0)
    u_cut = 50.0 / min(lambda_plus, lam_m)
    return LevyModel(
        name="tempered_stable", sigma=sigma, sigma_d1=sigma_d1, sigma_d2=sigma_d2,
        z_drift=z_drift, tail_moment_order=1.0, u_tail_cut=u_cut, sides=sides,
        params=dict(alpha=alpha, lambda_plus=lambda_plus, lambda_minus=lam_m,
                    scale_plus=scale_plus, scale_minus=sc_m, one_sided=one_sided,
                    z_drift=z_drift))


MODEL_REGISTRY = {"tempered_stable": tempered_stable}


def make_model(name: str, **params) -> LevyModel:
    try:
        factory = MODEL_REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown Levy model '{name}'; known: {sorted(MODEL_REGISTRY)}")
    return factory(**params)


# ----------------------------------------------------------------- chi

def chi(u, model: LevyModel, spec: PerturbationSpec):
    """Log-derivative of the deformed measure at c = 0.

    chi = -(sigma * rho)'/sigma = -(sigma'/sigma) rho - rho', supported
    on 0 < |u| < u0.
    """
    v = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.zeros_like(v)
    m = model.support_mask(v) & (np.abs(v) < spec.u0) & (np.abs(v) > 0)
    if m.any():
        w = v[m]
        dls = model.sigma_d1(w) / model.sigma(w)
        out[m] = -dls * rho(w, spec) - rho_d1(w, spec)
    return out[0] if np.ndim(u) == 0 else out


def chi_d1(u, model: LevyModel, spec: PerturbationSpec):
    """u-derivative of chi on the support (zero outside)."""
    v = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.zeros_like(v)
    m = model.support_mask(v) & (np.abs(v) < spec.u0) & (np.abs(v) > 0)
    if m.any():
        w = v[m]
        s = model.sigma(w)
        dls = model.sigma_d1(w) / s
        curv = model.sigma_d2(w) / s - dls * dls  # (log sigma)''
        out[m] = -curv * rho(w, spec) - dls * rho_d1(w, spec) - rho_d2(w, spec)
    return out[0] if np.ndim(u) == 0 else out


# ------------------------------------------------------ quadrature glue

def _side_integral(f, model: LevyModel, lo: float, hi: float, breakpoints=()):
    """Integral of f(u) sigma(u) du over (lo, hi) on both supported sides."""
    total, err = 0.0, 0.0
    if hi <= lo:
        return 0.0, 0.0
    for s in model.sides:
        def g(a, _s=s):
            u = _s * a
            return f(u) * model.sigma(u)
        v, e = integrate(g, lo, hi, breakpoints=breakpoints, log_graded=True)
        total += v
        err += e
    return total, err


def compensator_integrals(model: LevyModel, spec: PerturbationSpec, eps_trunc: float) -> dict:
    """Deterministic integrals against the truncated measure.

    Keys: comp_chi (integral of chi), comp_drift (integral of u over
    eps < |u| <= 1), mass_rho (measure of eps < |u| < u0), mass_total
    (measure of |u| > eps), var_dropped (integral of u^2 below eps),
    plus quadrature error estimates.
    """
    if not 0.0 < eps_trunc < spec.u1:
        raise ValueError(f"eps_trunc must lie in (0, u1), got {eps_trunc}")
    bp = (spec.u1,)
    comp_chi, e1 = _side_integral(lambda u: chi(u, model, spec), model, eps_trunc, spec.u0, bp)
    one = lambda u: np.ones_like(u)
    mass_rho, e2 = _side_integral(one, model, eps_trunc, spec.u0, bp)
    mass_tail, e3 = _side_integral(one, model, spec.u0, model.u_tail_cut)
    hi_drift = min(1.0, model.u_tail_cut)
    comp_drift, e4 = _side_integral(lambda u: u, model, eps_trunc, hi_drift,
                                    (spec.u1, spec.u0))
    # mass dropped below eps is infinite; its compensated variance is what matters
    def g2(a):
        tot = np.zeros_like(a)
        for s in model.sides:
            u = s * a
            tot = tot + u * u * model.sigma(u)
        return tot
    var_dropped, e5 = integrate(g2, eps_trunc * 1e-8, eps_trunc, log_graded=True)
    return dict(comp_chi=comp_chi, comp_drift=comp_drift, mass_rho=mass_rho,
                mass_total=mass_rho + mass_tail, mass_tail=mass_tail,
                var_dropped=var_dropped,
                quad_err=max(e1, e2, e3, e4, e5))


def default_eps_trunc(model: LevyModel, spec: PerturbationSpec, horizon: float,
                      activity_target: float = 50.0) -> float:
    """Largest eps with horizon * mu({eps < |u| < u0}) >= activity_target.

    Smaller eps is always admissible; the target controls both the
    probability of a path with no deformable jump (exp(-target)) and
    the truncation bias, so raise it for high-precision studies.
    """
    if horizon <= 0 or activity_target <= 0:
        raise ValueError("horizon and activity_target must be positive")
    need = activity_target / horizon
    one = lambda u: np.ones_like(u)

    def mass(eps):
        return _side_integral(one, model, eps, spec.u0, (spec.u1,))[0]

    lo, hi = 1e-12 * spec.u1, 0.999 * spec.u1
    if mass(lo) < need:
        raise ValueError(
            "jump activity too low to meet the deformable-jump target; "
            "increase the horizon or lower activity_target")
    if mass(hi) >= need:
        return hi
    for _ in range(80):
        mid = np.sqrt(lo * hi)
        if mass(mid) >= need:
            lo = mid
        else:
            hi = mid
    return lo


# ------------------------------------------------------------- sampling

_GL8 = np.polynomial.legendre.leggauss(8)


def _cumulative_mass(fdens, lo: float, hi: float, n_panels: int):
    """Panel edges plus cumulative integral of fdens at the edges."""
    edges = np.geomspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL8[0]).ravel()
    y = fdens(x).reshape(-1, _GL8[0].size)
    per_panel = half * (y @ _GL8[1])
    cum = np.concatenate([[0.0], np.cumsum(per_panel)])
    return edges, cum


@dataclass(frozen=True)
class JumpSampler:
    """Truncated-measure jump generator plus the matching compensators."""

    model: LevyModel
    spec: PerturbationSpec
    eps_trunc: float
    lam_total: float
    p_neg: float
    comp: dict
    _grid_pos: np.ndarray
    _cdf_pos: np.ndarray
    _grid_neg: np.ndarray
    _cdf_neg: np.ndarray

    def sample(self, rng: np.random.Generator, horizon: float, n_paths: int):
        """Padded (tau, amp) arrays, shape (n_paths, K), inf-padded tau."""
        counts = rng.poisson(self.lam_total * horizon, n_paths)
        k = max(1, int(counts.max()))
        idx = np.arange(k)
        tau = rng.uniform(0.0, horizon, (n_paths, k))
        tau[idx >= counts[:, None]] = np.inf
        tau.sort(axis=1)
        u_amp = rng.uniform(size=(n_paths, k))
        u_side = rng.uniform(size=(n_paths, k))
        neg = u_side < self.p_neg
        amp = np.where(
            neg,
            -np.interp(u_amp, self._cdf_neg, self._grid_neg) if self._cdf_neg.size > 1 else 0.0,
            np.interp(u_amp, self._cdf_pos, self._grid_pos) if self._cdf_pos.size > 1 else 0.0,
        )
        amp[~np.isfinite(tau)] = 0.0
        return tau, amp


def build_sampler(model: LevyModel, spec: PerturbationSpec, eps_trunc: float) -> JumpSampler:
    comp = compensator_integrals(model, spec, eps_trunc)
    lam_by_side = {}
    tables = {}
    for s in model.sides:
        dens = lambda a, _s=s: model.sigma(_s * a)
        edges, cum = _cumulative_mass(dens, eps_trunc, model.u_tail_cut, 2400)
        lam_by_side[s] = cum[-1]
        tables[s] = (edges, cum / cum[-1])
    lam_total = sum(lam_by_side.values())
    p_neg = lam_by_side.get(-1.0, 0.0) / lam_total
    empty = (np.zeros(1), np.zeros(1))
    gp, cp = tables.get(1.0, empty)
    gn, cn = tables.get(-1.0, empty)
    return JumpSampler(model=model, spec=spec, eps_trunc=eps_trunc,
                       lam_total=lam_total, p_neg=p_neg, comp=comp,
                       _grid_pos=gp, _cdf_pos=cp, _grid_neg=gn, _cdf_neg=cn)


# ------------------------------------------------------------- Girsanov

def girsanov_log_density(tau: np.ndarray, amp: np.ndarray, c: float, horizon: float,
                         model: LevyModel, spec: PerturbationSpec, eps_trunc: float):
    """log kappa_c per path for padded (tau, amp) jump arrays.

    kappa_c = exp( sum log m_c(u_i) + T * integral (1 - m_c) dmu ) over
    the truncated measure; E[kappa_c] = 1 exactly in the simulated
    world, and (kappa_c - 1)/c -> compensated integral of chi as c -> 0.
    """
    tau = np.atleast_2d(tau)
    amp = np.atleast_2d(amp)

    def log_m(u_flat):
        w, logj_minus = q_flow_with_jacobian(u_flat, -c, spec)
        return np.log(model.sigma(w)) - np.log(model.sigma(u_flat)) + logj_minus

    active = np.isfinite(tau) & (tau <= horizon) & (np.abs(amp) > 0) & (np.abs(amp) < spec.u0)
    term = np.zeros_like(amp)
    if active.any():
        term[active] = log_m(amp[active])
    jump_sum = term.sum(axis=1)

    bp = sorted({spec.u1, float(np.abs(q_flow(spec.u1, c, spec))),
                 float(np.abs(q_flow(-spec.u1, c, spec)))})
    def integrand(a):
        tot = np.zeros_like(a)
        for s in model.sides:
            u = s * a
            tot = tot + (1.0 - np.exp(log_m(u))) * model.sigma(u)
        return tot
    comp_c, _ = integrate(integrand, eps_trunc, spec.u0, breakpoints=bp, log_graded=True)
    return jump_sum + horizon * comp_c


# ------------------------------------------------------- assumption check

def check_assumption_h(model: LevyModel, spec: PerturbationSpec,
                       deriv_bound: float = 1e3) -> dict:
    """Numerical screen of the standing assumptions on the measure.

    Reports (i) the tail moment of order 2 + kappa, (ii) positivity and
    derivative consistency of sigma near zero, (iii) the grid suprema
    of |sigma'| |u| / sigma and sigma'' u^2 / sigma, (iv) growth of
    mu({|u| >= eps}) / log(1/eps) along eps -> 0.  Each clause gets a
    boolean; `passed` is their conjunction.
    """
    report: dict = {}
    kappa = model.tail_moment_order
    tail, _ = _side_integral(lambda u: np.abs(u) ** (2.0 + kappa), model, 1.0,
                             model.u_tail_cut)
    report["tail_moment"] = tail
    report["clause_i"] = bool(np.isfinite(tail))

    grid = np.geomspace(1e-8 * spec.u0, spec.u0, 400)
    pos_ok, fd_ok = True, True
    sup1, sup2 = 0.0, 0.0
    for s in model.sides:
        u = s * grid
        sig = model.sigma(u)
        pos_ok &= bool(np.all(sig > 0) and np.all(np.isfinite(sig)))
        h = 1e-6 * grid
        fd1 = (model.sigma(u + h) - model.sigma(u - h)) / (2 * h)
        rel = np.abs(fd1 - model.sigma_d1(u)) / np.maximum(np.abs(model.sigma_d1(u)), 1e-300)
        fd_ok &= bool(np.max(rel) < 1e-4)
        sup1 = max(sup1, float(np.max(np.abs(model.sigma_d1(u)) * grid / sig)))
        sup2 = max(sup2, float(np.max(np.abs(model.sigma_d2(u)) * grid ** 2 / sig)))
    report["sigma_positive"] = pos_ok
    report["sigma_d1_consistent"] = fd_ok
    report["clause_ii"] = pos_ok and fd_ok
    report["c0_first"] = sup1
    report["c0_second"] = sup2
    report["clause_iii"] = bool(max(sup1, sup2) < deriv_bound)

    eps_grid = 10.0 ** np.arange(-2, -7, -1)
    one = lambda u: np.ones_like(u)
    ratios = []
    for e in eps_grid:
        m_in, _ = _side_integral(one, model, e, spec.u0, (spec.u1,))
        m_out, _ = _side_integral(one, model, spec.u0, model.u_tail_cut)
        ratios.append((m_in + m_out) / np.log(1.0 / e))
    report["activity_ratios"] = ratios
    report["clause_iv"] = bool(np.all(np.diff(ratios) > 0) and ratios[-1] > 2.0 * ratios[0])

    report["passed"] = all(report[k] for k in ("clause_i", "clause_ii", "clause_iii", "clause_iv"))
    return report


def require_assumption_h(model: LevyModel, spec: PerturbationSpec, policy: str = "warn"):
    """Gate used by the CLI; policy is 'warn', 'error' or 'skip'."""
    if policy == "skip":
        return None
    rep = check_assumption_h(model, spec)
    if not rep["passed"]:
        failed = [k for k in ("clause_i", "clause_ii", "clause_iii", "clause_iv") if not rep[k]]
        msg = f"model '{model.name}' fails assumption screen: {', '.join(failed)}"
        if policy == "error":
            raise ValueError(msg)
        warnings.warn(msg)
    return rep
