import numpy as np
import pytest

from trustfit import (
    Dataset,
    FitOptions,
    ModelFunction,
    Status,
    builtin_model,
    exponential,
    fit,
    gaussian2d_model,
    linear,
)
from trustfit.dual import value_of
from trustfit.linalg import svd
from trustfit.solver import (
    TrustRegionState,
    apply_update,
    compute_scaling,
    gain_ratio,
    initial_radius,
    quadratic_model_decrease,
)


def _state(x=(1.0, 2.0), delta=1.0):
    x = np.array(x)
    return TrustRegionState(x=x, delta=delta, D=np.ones(x.size), cost=1.0, gradient=np.zeros(x.size))


def test_predicted_reduction_hand_case():
    f = svd(np.eye(2), [-1.0, 0.0])
    assert quadratic_model_decrease(np.array([-1.0, 0.0]), f, np.array([1.0, 0.0])) == pytest.approx(0.5)


def test_predicted_reduction_zero_step():
    f = svd(np.eye(2), [1.0, 1.0])
    assert quadratic_model_decrease(np.ones(2), f, np.zeros(2)) == 0.0


def test_predicted_reduction_dense_oracle(rng):
    J, r = rng.normal(size=(30, 4)), rng.normal(size=30)
    g = J.T @ r
    p = rng.normal(size=4)
    dense = -(g @ p + 0.5 * p @ (J.T @ J) @ p)
    assert quadratic_model_decrease(g, svd(J, r), p) == pytest.approx(dense, abs=1e-10)


@pytest.mark.parametrize(
    "f_old, f_new, pred, expected",
    [(10.0, 8.0, 2.0, 1.0), (10.0, 8.0, 0.0, 0.0), (10.0, 10.0, 1e-20, 0.0)],
)
def test_gain_ratio(f_old, f_new, pred, expected):
    assert gain_ratio(f_old, f_new, pred) == expected


def test_gain_ratio_negative_on_increase():
    assert gain_ratio(10.0, 11.0, 2.0) < 0


def test_update_expand():
    x, delta, ok = apply_update(_state(), np.array([0.6, 0.0]), np.array([0.1, 0.2]), 0.9)
    assert ok and delta == 2.0
    np.testing.assert_allclose(x, [1.1, 2.2])


def test_update_keep():
    x, delta, ok = apply_update(_state(), np.array([0.6, 0.0]), np.array([0.1, 0.2]), 0.5)
    assert ok and delta == 1.0
    np.testing.assert_allclose(x, [1.1, 2.2])


def test_update_shrink():
    x, delta, ok = apply_update(_state(delta=3.0), np.array([2.0, 0.0]), np.array([0.1, 0.2]), 0.1)
    assert not ok and delta == 0.5
    np.testing.assert_array_equal(x, [1.0, 2.0])


def test_update_requires_descent():
    _, delta, ok = apply_update(_state(), np.array([2.0, 0.0]), np.ones(2), 0.5, improved=False)
    assert not ok and delta == 0.5


def test_scaling_from_column_norms():
    J = np.array([[2.0, 0.0], [0.0, 3.0]])
    np.testing.assert_array_equal(compute_scaling(J), [2, 3])


def test_scaling_zero_column():
    np.testing.assert_array_equal(compute_scaling(np.array([[0.0, 1.0]])), [1, 1])


def test_scaling_running_max():
    J = np.array([[2.0, 0.0], [0.0, 3.0]])
    np.testing.assert_array_equal(compute_scaling(J, np.array([5.0, 1.0])), [5, 3])


def test_initial_radius_fallback():
    assert initial_radius(np.ones(2), np.zeros(2)) == 1.0
    assert initial_radius(np.array([3.0, 1.0]), np.array([1.0, 4.0])) == 5.0


def test_linear_fit_closed_form(rng):
    y = rng.uniform(-5, 5, 40)
    z = 2.5 * y - 1.25 + 0.1 * rng.normal(size=40)
    res = fit(linear, Dataset(y, z), [2.0, -1.0])
    A = np.column_stack([y, np.ones_like(y)])
    ref = np.linalg.solve(A.T @ A, A.T @ z)
    np.testing.assert_allclose(res.x, ref, rtol=1e-10)
    assert res.success and res.iterations <= 2
    assert abs(res.gamma_history[0] - 1.0) <= 1e-10


def test_exact_linear_data_zero_cost():
    y = np.linspace(0, 1, 11)
    res = fit(linear, Dataset(y, 3 * y + 1), [2.5, 1.2])
    assert res.cost <= 1e-20 and res.iterations <= 2


def test_already_optimal_seed():
    y = np.linspace(0, 2, 20)
    x = np.array([0.8, -1.3, 0.2])
    res = fit(exponential, Dataset(y, exponential(y, x)), x)
    assert res.status is Status.CONVERGED_GTOL
    assert res.accepted_steps == 0 and res.iterations == 0


def test_gaussian_recovery(gaussian_image, rng):
    data, truth = gaussian_image
    for _ in range(3):
        x0 = truth * (1 + rng.uniform(-0.2, 0.2, 7))
        res = fit(gaussian2d_model, data, x0)
        assert res.success
        np.testing.assert_allclose(res.x, truth, rtol=1e-6)


def test_accepted_costs_strictly_decrease(rng):
    y = np.linspace(0, 3, 60)
    z = exponential(y, [1.2, -0.8, 0.3]) + 0.02 * rng.normal(size=60)
    res = fit(exponential, Dataset(y, z), [3.0, -0.1, -1.0])
    assert res.success
    assert np.all(np.diff(res.cost_history) < 0)
    sig = FitOptions().subproblem_sigma
    for p, d in zip(res.step_norm_history, res.delta_history):
        assert p <= d * (1 + sig)


def test_determinism(rng):
    y = np.linspace(0, 3, 50)
    z = exponential(y, [1.2, -0.8, 0.3]) + 0.02 * rng.normal(size=50)
    a = fit(exponential, Dataset(y, z), [2.0, -0.2, 0.0])
    b = fit(exponential, Dataset(y, z), [2.0, -0.2, 0.0])
    assert a.x.tobytes() == b.x.tobytes()
    assert a.delta_history == b.delta_history and a.alpha_history == b.alpha_history
    assert a.cost == b.cost and a.iterations == b.iterations


def test_scale_equivariance(rng):
    y = np.linspace(0, 3, 50)
    z = exponential(y, [1.2, -0.8, 0.3]) + 0.02 * rng.normal(size=50)
    c = np.array([1e3, 1.0, 1e-2])
    scaled = ModelFunction(lambda yy, x: exponential(yy, [x[0] / c[0], x[1] / c[1], x[2] / c[2]]), 3)
    x0 = np.array([2.0, -0.2, 0.0])
    a = fit(exponential, Dataset(y, z), x0)
    b = fit(scaled, Dataset(y, z), x0 * c)
    assert b.cost == pytest.approx(a.cost, rel=1e-8)
    np.testing.assert_allclose(b.x / c, a.x, rtol=1e-6)


def test_affine_models_have_unit_gain(rng):
    model = builtin_model("polynomial:4")
    y = rng.uniform(-1, 1, 80)
    z = 1 - y + 0.5 * y**3 + 0.01 * rng.normal(size=80)
    res = fit(model, Dataset(y, z), np.zeros(5), delta0=1e-2)
    assert res.success
    for gamma, d, p in zip(res.gamma_history, res.delta_history, res.step_norm_history):
        if gamma > 0.25:
            assert gamma == pytest.approx(1.0, abs=1e-10)


def test_max_iterations_status():
    y = np.linspace(0, 3, 30)
    res = fit(exponential, Dataset(y, exponential(y, [1.0, -1.0, 0.5])), [5.0, 0.5, -2.0], max_iterations=1)
    assert res.status is Status.MAX_ITERATIONS and res.iterations == 1


def test_numeric_failure_keeps_last_iterate():
    def blowup(y, x):
        if value_of(x[0]) > 1.5:
            return x[0] * np.log(y - 10.0)
        return x[0] * y

    model = ModelFunction(blowup, 1, "blowup")
    y = np.linspace(1, 2, 10)
    res = fit(model, Dataset(y, 3.0 * y), [1.0], delta0=10.0)
    assert res.status is Status.NUMERIC_FAILURE
    assert res.x[0] <= 1.5 and np.isfinite(res.cost)


def test_options_validation():
    with pytest.raises(ValueError):
        FitOptions(ftol=0.0)
    with pytest.raises(ValueError):
        fit(linear, Dataset([1.0, 2.0], [1.0, 2.0]), [1.0, 2.0, 3.0])


def test_timings_recorded(gaussian_image):
    data, truth = gaussian_image
    res = fit(gaussian2d_model, data, truth * 1.05)
    assert set(res.timings) == {"residual", "jacobian", "svd", "subproblem", "total"}
    assert res.timings["total"] >= res.timings["svd"] > 0
