import numpy as np
import pytest

from trustfit.linalg import svd
from trustfit.subproblem import (
    phi_and_derivative,
    solve_lm_parameter,
    solve_shifted,
    solve_trust_region_step,
)


def bisect_phi(factors, delta, lo, hi, iters=200):
    """Plain bisection on phi over [lo, hi]; phi(lo) > 0 >= phi(hi)."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if phi_and_derivative(factors, delta, mid)[0] > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def random_instance(rng, n_max=10, v_max=200):
    n = int(rng.integers(1, n_max + 1))
    v = int(rng.integers(n, v_max + 1))
    J = rng.normal(size=(v, n)) * rng.lognormal(0, 1, size=n)
    r = rng.normal(size=v)
    return J, r


def test_identity_unshifted():
    f = svd(np.eye(2), [1.0, 2.0])
    np.testing.assert_allclose(solve_shifted(f, 0.0), [-1, -2])


def test_identity_shifted():
    f = svd(np.eye(2), [1.0, 2.0])
    np.testing.assert_allclose(solve_shifted(f, 1.0), [-0.5, -1.0])


def test_shifted_matches_dense_solve(rng):
    J, r = rng.normal(size=(40, 3)), rng.normal(size=40)
    p = solve_shifted(svd(J, r), 0.7)
    dense = np.linalg.solve(J.T @ J + 0.7 * np.eye(3), -J.T @ r)
    np.testing.assert_allclose(p, dense, rtol=1e-10)


def test_unshifted_rank_deficient_is_minimum_norm(rng):
    B = rng.normal(size=(25, 2))
    J = np.column_stack([B, B @ [1.0, -2.0]])
    r = rng.normal(size=25)
    p = solve_shifted(svd(J, r), 0.0)
    np.testing.assert_allclose(p, -np.linalg.pinv(J) @ r, atol=1e-10)


def test_phi_on_boundary():
    f = svd(np.eye(2), [3.0, 4.0])
    phi, _ = phi_and_derivative(f, 5.0, 0.0)
    assert phi == pytest.approx(0.0, abs=1e-14)


def test_phi_large_alpha_limit():
    f = svd(np.eye(2), [3.0, 4.0])
    phi, _ = phi_and_derivative(f, 5.0, 1e12)
    assert phi == pytest.approx(-5.0, abs=1e-6)


def test_phi_derivative_finite_differences(rng):
    for _ in range(50):
        J, r = random_instance(rng)
        f = svd(J, r)
        alpha = float(rng.lognormal(0, 1))
        h = 1e-6 * (1 + alpha)
        _, dphi = phi_and_derivative(f, 1.0, alpha)
        fd = (phi_and_derivative(f, 1.0, alpha + h)[0] - phi_and_derivative(f, 1.0, alpha - h)[0]) / (2 * h)
        assert dphi == pytest.approx(fd, rel=1e-5)
        assert dphi < 0


def test_phi_zero_step():
    f = svd(np.eye(2), [0.0, 0.0])
    assert phi_and_derivative(f, 2.0, 1.0) == (-2.0, 0.0)


def test_phi_strictly_decreasing(rng):
    J, r = random_instance(rng)
    f = svd(J, r)
    grid = np.geomspace(1e-6, 1e6, 200)
    phis = [phi_and_derivative(f, 1.0, a)[0] for a in grid]
    assert np.all(np.diff(phis) < 0)


def test_lm_parameter_scalar_algebra():
    # ||p(alpha)|| = 5 / (1 + alpha) = 1
    sol = solve_lm_parameter(svd(np.eye(2), [3.0, 4.0]), 1.0)
    assert sol.alpha == pytest.approx(4.0, rel=1e-12)
    assert sol.on_boundary and not sol.degraded


def test_lm_parameter_matches_bisection_small_case():
    f = svd(np.diag([1.0, 2.0]), [1.0, 1.0])
    delta = 0.1
    upper = np.linalg.norm(f.s * f.Utr) / delta
    root = bisect_phi(f, delta, 0.0, upper)
    loose = solve_lm_parameter(f, delta, sigma=0.01)
    assert abs(phi_and_derivative(f, delta, loose.alpha)[0]) <= 0.01 * delta
    tight = solve_lm_parameter(f, delta, sigma=1e-10)
    assert tight.alpha == pytest.approx(root, rel=1e-6)


def test_lm_parameter_random_instances(rng):
    for _ in range(200):
        J, r = random_instance(rng)
        f = svd(J, r)
        p0 = np.linalg.norm(solve_shifted(f, 0.0))
        delta = p0 * rng.uniform(0.01, 0.95)
        sol = solve_lm_parameter(f, delta, sigma=0.01)
        assert sol.iterations <= 10 and not sol.degraded
        assert abs(np.linalg.norm(sol.p) - delta) <= 0.01 * delta
        assert sol.alpha > 0


def test_trust_region_step_interior():
    f = svd(np.eye(2), [0.3, 0.4])
    step = solve_trust_region_step(f, 1.0)
    assert step.alpha == 0.0
    np.testing.assert_allclose(step.p, [-0.3, -0.4])


def test_degraded_iteration_still_feasible():
    f = svd(np.diag([1e3, 1e-3]), [1.0, 1e3])
    delta = 0.5
    sol = solve_lm_parameter(f, delta, sigma=0.01, max_iter=1)
    assert np.linalg.norm(sol.p) <= delta * 1.01 + 1e-15


def test_rank_deficient_start(rng):
    B = rng.normal(size=(25, 2))
    J = np.column_stack([B, B[:, 0]])
    f = svd(J, rng.normal(size=25))
    p0 = np.linalg.norm(solve_shifted(f, 0.0))
    sol = solve_lm_parameter(f, 0.3 * p0)
    assert abs(np.linalg.norm(sol.p) - 0.3 * p0) <= 0.01 * 0.3 * p0


def test_bad_arguments():
    f = svd(np.eye(2), [1.0, 1.0])
    with pytest.raises(ValueError):
        solve_shifted(f, -1.0)
    with pytest.raises(ValueError):
        solve_lm_parameter(f, 0.0)
    with pytest.raises(ValueError):
        solve_lm_parameter(f, 1.0, sigma=1.5)
