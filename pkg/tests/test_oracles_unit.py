import math

import numpy as np

from levyscore import pool_weights, sample_pool
from levyscore.oracles import (
    duality_check,
    fd_variation_check,
    fisher_fd_quadrature,
    girsanov_mc_check,
    integral_formula_check,
    perturb_jumps,
    score_duality_check,
    solve_batch_integral,
)
from levyscore.perturbation import rho
from levyscore.rng import substream

SEED = 90210


def test_fd_stencils_confirm_variations(engine):
    rep = fd_variation_check(engine, 1.0, 1.0, 1.0, n_paths=25, seed=SEED,
                             c=1e-3, dtheta=1e-4, step=1e-3)
    assert rep["dx"] < 1e-5
    assert rep["d2x"] < 1e-4
    assert rep["d3x"] < 1e-3
    assert rep["dth_x"] < 1e-7
    assert rep["d_dth_x"] < 1e-4


def test_integral_evaluator_agrees(engine):
    rep = integral_formula_check(engine, 1.0, 1.0, 1.0, n_paths=50, seed=SEED,
                                 step=2e-3)
    for k in ("x", "cal_e", "dx", "d2x", "d3x", "dth_x", "d_dth_x"):
        assert rep[k] < 1e-10, k


def test_integral_evaluator_no_jump_closed_form(engine):
    tau = np.full((1, 1), np.inf)
    amp = np.zeros((1, 1))
    out = solve_batch_integral(engine, 1.3, 1.0, 1.0, tau, amp, step=1e-3)
    eT = math.exp(-1.3)
    assert abs(out["x"][0] - eT) < 1e-12
    assert abs(out["cal_e"][0] - eT) < 1e-12
    assert abs(out["dth_x"][0] + eT) < 1e-12
    for k in ("dx", "d2x", "d3x", "d_dth_x"):
        assert abs(out[k][0]) < 1e-14, k


def test_perturb_jumps_geometry(engine):
    spec = engine.spec
    amp = np.array([[0.0, 0.3, -0.3, 1.0, 2.5, 0.0]])
    moved = perturb_jumps(amp, 0.01, spec)
    # zeros (padding), the support edge and beyond are fixed points
    for j in (0, 3, 4, 5):
        assert moved[0, j] == amp[0, j]
    # interior amplitudes follow the exact flow u / (1 - u c) while the
    # whole trajectory stays inside the quadratic core
    for j in (1, 2):
        u = amp[0, j]
        assert abs(moved[0, j] - u / (1.0 - u * 0.01)) < 1e-12
        # and to first order that is u + c * rho(u)
        lin = u + 0.01 * float(rho(np.array([u]), spec)[0])
        assert abs(moved[0, j] - lin) < 5e-6


def test_duality_on_pool(small_weights):
    for name, rep in duality_check(small_weights).items():
        assert abs(rep["z"]) < 4.0, (name, rep)


def test_score_duality_small(engine):
    out = score_duality_check(engine, 1.0, 1.0, 1.0, n_paths=8000, seed=SEED,
                              dtheta=1e-2, step=5e-3)
    for name, rep in out.items():
        assert abs(rep["z"]) < 4.0, (name, rep)


def test_girsanov_small(engine):
    rep = girsanov_mc_check(engine, 1.0, 1.0, 1.0, n_paths=20_000, seed=SEED,
                            c=1e-2, step=5e-3)
    assert abs(rep["z_kappa"]) < 4.0
    assert abs(rep["z_change_of_vars"]) < 4.0
    assert rep["corr_linearisation"] > 0.999


def test_fisher_quadrature_sane(engine):
    rep = fisher_fd_quadrature(engine, 1.0, 1.0, 1.0, n_paths=30_000,
                               seed=SEED, step=5e-3)
    assert 0.2 < rep["info"] < 0.8
    assert rep["mass_covered"] > 0.9
