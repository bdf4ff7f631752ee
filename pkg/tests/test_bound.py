import numpy as np
import pytest

from recpoison.attack.bound import estimate_lipschitz, verify_transfer_bound


def quadratic(theta):
    theta = np.asarray(theta, dtype=np.float64)
    return 0.5 * float(theta @ theta), theta


def test_zero_epsilon_equality():
    theta = np.array([1.0, -2.0, 0.5])
    report = verify_transfer_bound(theta, quadratic, epsilon=0.0, samples=20, seed=0)
    assert report.violations == 0
    assert report.bound_value == pytest.approx(quadratic(theta)[0])


@pytest.mark.parametrize("epsilon", [0.01, 0.05, 0.2])
def test_quadratic_exact_lipschitz_no_violations(epsilon):
    theta = np.array([0.3, -1.2, 2.0, 0.0])
    report = verify_transfer_bound(
        theta, quadratic, epsilon=epsilon, samples=200, lipschitz_estimate=1.0, seed=1
    )
    assert report.violations == 0
    assert report.lipschitz_supplied


@pytest.mark.parametrize("epsilon", [0.01, 0.05, 0.2])
def test_quadratic_estimated_lipschitz_no_violations(epsilon):
    theta = np.array([0.3, -1.2, 2.0, 0.0])
    report = verify_transfer_bound(theta, quadratic, epsilon=epsilon, samples=200, seed=2)
    assert report.violations == 0
    # gradient-difference ratio of a quadratic is exactly 1, inflated x2
    assert report.lipschitz == pytest.approx(2.0)


def test_estimate_lipschitz_quadratic():
    rng = np.random.default_rng(3)
    est = estimate_lipschitz(quadratic, np.zeros(5), 0.5, pairs=50, rng=rng, inflate=1.0)
    assert est == pytest.approx(1.0)


def test_violations_counted_for_cubic():
    # steeper-than-quadratic growth with a deliberately understated constant
    def cubic(theta):
        t = float(np.asarray(theta)[0])
        return t**4, np.array([4 * t**3])

    report = verify_transfer_bound(
        np.array([2.0]), cubic, epsilon=1.5, samples=300, lipschitz_estimate=1e-6, seed=4
    )
    assert report.violations > 0
    assert report.max_excess > 0


def test_sample_count_validated():
    with pytest.raises(ValueError):
        verify_transfer_bound(np.zeros(2), quadratic, 0.1, samples=0)
