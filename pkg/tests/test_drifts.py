import numpy as np
import pytest

from levyscore.drifts import DRIFT_REGISTRY, make_drift, validate_drift


@pytest.mark.parametrize("name", sorted(DRIFT_REGISTRY))
def test_registry_partials_consistent(name):
    drift = make_drift(name)
    rep = validate_drift(drift)
    assert rep["passed"], rep


def test_linear_values():
    d = make_drift("linear")
    x = np.array([-2.0, 0.0, 1.5])
    np.testing.assert_array_equal(d.a(0.7, x), -0.7 * x)
    np.testing.assert_array_equal(d.a_x(0.7, x), np.full(3, -0.7))
    np.testing.assert_array_equal(d.a_xx(0.7, x), np.zeros(3))
    np.testing.assert_array_equal(d.a_th(0.7, x), -x)
    np.testing.assert_array_equal(d.a_xth(0.7, x), np.full(3, -1.0))


def test_theta_bounds():
    d = make_drift("linear", 0.2, 2.0)
    assert d.theta_lo == 0.2 and d.theta_hi == 2.0
    d.check_theta(1.0)
    with pytest.raises(ValueError):
        d.check_theta(0.1)
    with pytest.raises(ValueError):
        d.check_theta(2.5)


def test_unknown_drift():
    with pytest.raises(ValueError):
        make_drift("cubic")


def test_bad_interval():
    with pytest.raises(ValueError):
        make_drift("linear", 2.0, 0.5)
