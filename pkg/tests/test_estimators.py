import math

import numpy as np
import pytest

from levyscore import (
    MCEstimate,
    estimate_cdf,
    estimate_density,
    estimate_fisher_onestep,
    estimate_score,
    kde_density,
    normalization_integral,
    pool_weights,
    sample_pool,
    silverman_bandwidth,
)
from levyscore.weights import WeightSet


def _synthetic_ws():
    x = np.array([0.0, 2.0, 0.4, 1.6])
    xi = np.array([2.0, 4.0, -1.0, 0.5])
    xi2 = np.array([1.0, -2.0, 3.0, 0.25])
    valid = np.ones(4, dtype=bool)
    return WeightSet(x=x, valid=valid, dx_floor=1e-12, xi=xi, xi1=xi.copy(),
                     xi2=xi2)


def test_density_rep1_side_rule():
    ws = _synthetic_ws()
    hi = estimate_density(ws, [1.5], x0=1.0, rep=1)[0]
    # above the start point: E[xi 1{X > y}]
    assert abs(hi.value - np.mean([0.0, 4.0, 0.0, 0.5])) < 1e-14
    lo = estimate_density(ws, [0.5], x0=1.0, rep=1)[0]
    # below: -E[xi 1{X <= y}]
    assert abs(lo.value - (-np.mean([2.0, 0.0, -1.0, 0.0]))) < 1e-14


def test_density_rep2_hinge():
    ws = _synthetic_ws()
    est = estimate_density(ws, [0.5], x0=1.0, rep=2)[0]
    hinge = np.maximum(ws.x - 0.5, 0.0)
    assert abs(est.value - np.mean(hinge * ws.xi2)) < 1e-14
    with pytest.raises(ValueError):
        estimate_density(ws, [0.5], x0=1.0, rep=3)


def test_thread_count_does_not_change_pool(engine):
    kw = dict(stack="full", step=5e-3, chunk=1000)
    a = sample_pool(engine, 1.0, 1.0, 1.0, 6000, 77, ("unit", "thr"),
                    threads=1, **kw)
    b = sample_pool(engine, 1.0, 1.0, 1.0, 6000, 77, ("unit", "thr"),
                    threads=3, **kw)
    assert sorted(a) == sorted(b)
    for k in a:
        np.testing.assert_array_equal(a[k], b[k])


def test_pool_layout_is_chunk_indexed(engine):
    # chunk index is part of the stream identity: a prefix of a larger
    # pool with the same chunking is bitwise the same draw
    kw = dict(stack="plain", step=5e-3, chunk=500)
    small = sample_pool(engine, 1.0, 1.0, 1.0, 1000, 31, ("unit", "grow"), **kw)
    big = sample_pool(engine, 1.0, 1.0, 1.0, 2000, 31, ("unit", "grow"), **kw)
    np.testing.assert_array_equal(small["x"], big["x"][:1000])


def test_cdf_estimator_monotone(small_weights):
    ys = np.linspace(-2.0, 3.0, 21)
    cdf = [e.value for e in estimate_cdf(small_weights, ys)]
    assert np.all(np.diff(cdf) >= 0)
    assert cdf[0] >= 0 and cdf[-1] <= 1


def test_silverman_formula():
    x = np.arange(100, dtype=float)
    want = 1.06 * x.std(ddof=1) * 100 ** (-0.2)
    assert abs(silverman_bandwidth(x) - want) < 1e-12


def test_kde_matches_normal_pdf():
    rng = np.random.default_rng(5150)
    draws = rng.standard_normal(200_000)
    ys = np.array([-1.0, 0.0, 0.5, 1.5])
    for y, est in zip(ys, kde_density(draws, ys)):
        pdf = math.exp(-0.5 * y * y) / math.sqrt(2 * math.pi)
        # kernel smoothing bias is O(h^2) ~ 0.5 h^2 |pdf''|
        h = silverman_bandwidth(draws)
        bias = 0.5 * h * h * abs(y * y - 1.0) * pdf
        assert abs(est.value - pdf) < 4 * est.stderr + 1.5 * bias, y


def test_score_flags_and_bandwidth(small_weights):
    far = estimate_score(small_weights, [40.0])[0]
    assert far.flags.get("ess_low")
    near = estimate_score(small_weights, [1.0], bandwidth=0.2)[0]
    assert near.flags["bandwidth"] == 0.2
    assert not near.flags.get("ess_low")
    with pytest.raises(ValueError):
        estimate_score(small_weights, [1.0], bandwidth=-0.1)


def test_normalization_matches_grid_sum(small_weights):
    lo, hi, n_grid = -6.0, 8.0, 141
    est = normalization_integral(small_weights, 1.0, lo, hi, n_grid=n_grid)
    grid = np.linspace(lo, hi, n_grid)
    w = np.full(n_grid, (hi - lo) / (n_grid - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    direct = sum(wk * e.value
                 for wk, e in zip(w, estimate_density(small_weights, grid, 1.0)))
    assert abs(est.value - direct) < 1e-10
    assert abs(est.value - 1.0) < 4 * est.stderr


def test_fisher_onestep_output(small_weights):
    rng = np.random.default_rng(99)
    draws = rng.choice(small_weights.x[small_weights.valid], 300)
    est = estimate_fisher_onestep(small_weights, draws)
    assert est.value > 0
    assert est.n_used == 300
    assert "scores" in est.flags and len(est.flags["scores"]) == 300
    assert isinstance(est.flags["ess_low_count"], int)


def test_mc_estimate_zscore():
    est = MCEstimate(value=1.2, stderr=0.1, n_used=10)
    assert abs(est.zscore(1.0) - 2.0) < 1e-14
    degenerate = MCEstimate(value=1.0, stderr=0.0, n_used=1)
    assert math.isinf(degenerate.zscore(0.0))
