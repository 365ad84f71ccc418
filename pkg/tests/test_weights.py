import numpy as np
import pytest

from levyscore.weights import (
    DX_FLOOR,
    compute_weights,
    xi1_weight,
    xi2_weight,
    xi_shifted,
    xi_weight,
)


def test_weight_formulas_on_hand_values():
    # one concrete stack, alternative factorisations written out in full
    delta1, dx, d2x, d3x, dth, ddth, dd1 = 0.7, 0.25, -0.3, 0.11, 1.4, -0.5, 0.9
    xi = xi_weight(delta1, dx, d2x)
    assert abs(xi - (delta1 * dx + d2x) / dx ** 2) < 1e-14
    xi1 = xi1_weight(delta1, dx, d2x, dth, ddth)
    assert abs(xi1 - (dth * xi - ddth / dx)) < 1e-14
    xi2 = xi2_weight(delta1, dd1, dx, d2x, d3x)
    want = (delta1 ** 2 - dd1 + (3 * delta1 * d2x - d3x) / dx
            + 3 * d2x ** 2 / dx ** 2) / dx ** 2
    assert abs(xi2 - want) < 1e-12


def test_xi2_is_iterated_xi_on_degenerate_stack():
    # with the second and third variations switched off, xi reduces to
    # delta1/DX and xi2 to (delta1^2 - Ddelta1)/DX^2
    xi2 = xi2_weight(0.8, 0.3, 0.5, 0.0, 0.0)
    assert abs(xi2 - (0.8 ** 2 - 0.3) / 0.25) < 1e-14


def test_compute_weights_masks_and_nans():
    term = {
        "x": np.array([0.1, 0.2, 0.3, 0.4]),
        "dx": np.array([0.5, 1e-13, 0.2, -0.1]),
        "d2x": np.array([0.1, 0.1, 0.1, 0.1]),
        "delta1": np.array([1.0, 1.0, 1.0, 1.0]),
        "ok": np.array([True, True, False, True]),
    }
    ws = compute_weights(term)
    np.testing.assert_array_equal(ws.valid, [True, False, False, False])
    assert ws.n_total == 4 and ws.n_dropped == 3
    assert ws.drop_rate == 0.75
    assert np.isfinite(ws.xi[0])
    assert np.all(np.isnan(ws.xi[1:]))
    assert ws.xi1 is None and ws.xi2 is None


def test_compute_weights_full_stack():
    n = 8
    rng = np.random.default_rng(3)
    term = {
        "x": rng.normal(size=n),
        "dx": rng.uniform(0.1, 1.0, n),
        "d2x": rng.normal(size=n),
        "d3x": rng.normal(size=n),
        "dth_x": rng.normal(size=n),
        "d_dth_x": rng.normal(size=n),
        "delta1": rng.normal(size=n),
        "d_delta1": rng.normal(size=n),
        "ok": np.ones(n, dtype=bool),
    }
    ws = compute_weights(term)
    assert ws.valid.all()
    np.testing.assert_allclose(
        ws.xi, xi_weight(term["delta1"], term["dx"], term["d2x"]))
    np.testing.assert_allclose(
        ws.xi1, xi1_weight(term["delta1"], term["dx"], term["d2x"],
                           term["dth_x"], term["d_dth_x"]))
    np.testing.assert_allclose(
        ws.xi2, xi2_weight(term["delta1"], term["d_delta1"], term["dx"],
                           term["d2x"], term["d3x"]))


def test_custom_floor_and_missing_keys():
    term = {
        "x": np.array([0.0]), "dx": np.array([1e-6]),
        "d2x": np.array([0.0]), "delta1": np.array([0.0]),
        "ok": np.array([True]),
    }
    assert compute_weights(term).valid[0]
    assert not compute_weights(term, dx_floor=1e-3).valid[0]
    with pytest.raises(ValueError):
        compute_weights({"x": np.zeros(1)})


def test_xi_shifted_guard():
    with pytest.raises(ValueError):
        xi_shifted(0.5, 0.2, 0.1, shift=0.0)
    val = xi_shifted(0.5, 0.2, 0.1, shift=0.05)
    assert abs(val - (0.5 / 0.25 + 0.1 / 0.0625)) < 1e-14


def test_floor_default_visible():
    assert DX_FLOOR == 1e-12
