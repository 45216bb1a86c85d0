import math

import numpy as np
import pytest

from trustfit import (
    Dataset,
    EvaluationError,
    ModelFunction,
    builtin_model,
    eval_cost,
    eval_jacobian,
    eval_jacobian_fd,
    eval_residuals,
    exponential,
    gaussian2d_model,
    linear,
)

scale_model = ModelFunction(lambda y, x: x[0] * y, 1, "scale")
const_model = ModelFunction(lambda y, x: x[0] + 0.0 * y, 1, "const")
exp_rate = ModelFunction(lambda y, x: np.exp(x[0] * y), 1, "exp_rate")


def test_residuals_exact_model():
    d = Dataset([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(eval_residuals(scale_model, d, [1.0]), [0, 0, 0])


def test_residuals_constant_model():
    d = Dataset([0.0, 0.0], [3.0, 4.0])
    np.testing.assert_array_equal(eval_residuals(const_model, d, [5.0]), [2, 1])


def test_residuals_zero_on_noise_free_gaussian(gaussian_image):
    data, truth = gaussian_image
    r = eval_residuals(gaussian2d_model, data, truth)
    assert np.max(np.abs(r)) <= 1e-12


def test_residuals_report_failing_index():
    bad = ModelFunction(lambda y, x: x[0] / y, 1, "recip")
    with pytest.raises(EvaluationError) as exc:
        eval_residuals(bad, Dataset([1.0, 0.0, 2.0], [0, 0, 0]), [1.0])
    assert exc.value.index == 1


def test_wrong_parameter_count():
    with pytest.raises(ValueError):
        eval_residuals(linear, Dataset([1.0, 2.0], [1.0, 2.0]), [1.0])


@pytest.mark.parametrize("r, f", [([0, 0, 0], 0.0), ([3, 4], 12.5)])
def test_cost_small_cases(r, f):
    assert eval_cost(r) == f


def test_cost_matches_loop_accumulation(rng):
    r = rng.normal(size=100)
    total = 0.0
    for ri in r:
        total += ri * ri
    assert eval_cost(r) == pytest.approx(0.5 * total, rel=1e-14)
    assert eval_cost(r) == pytest.approx(0.5 * math.fsum(r * r), rel=1e-14)


def test_jacobian_linear_model():
    d = Dataset([1.0, 2.0], [0.0, 0.0])
    np.testing.assert_array_equal(eval_jacobian(linear, d, [0.3, -2.0]), [[1, 1], [2, 1]])


def test_jacobian_exponential_rate():
    np.testing.assert_allclose(eval_jacobian(exp_rate, Dataset([3.0], [0.0]), [0.0]), [[3.0]])


def test_jacobian_gaussian_vs_finite_differences(gaussian_image, rng):
    data, truth = gaussian_image
    x = truth * (1 + rng.uniform(-0.2, 0.2, 7))
    ad = eval_jacobian(gaussian2d_model, data, x)
    fd = eval_jacobian_fd(gaussian2d_model, data, x)
    assert np.max(np.abs(ad - fd) / (1 + np.abs(fd))) <= 1e-6


def test_fd_agrees_on_linear_model(rng):
    d = Dataset(rng.uniform(-3, 3, 20), np.zeros(20))
    x = rng.normal(size=2)
    np.testing.assert_allclose(eval_jacobian_fd(linear, d, x), eval_jacobian(linear, d, x), atol=1e-9)


def test_fd_constant_model_columns():
    d = Dataset([0.5, 1.5, 2.5], [0, 0, 0])
    jac = eval_jacobian_fd(const_model, d, [4.0])
    np.testing.assert_allclose(jac, np.ones((3, 1)), atol=1e-9)


def test_affine_model_jacobian_constant_in_x(rng):
    model = builtin_model("polynomial:3")
    d = Dataset(rng.uniform(-2, 2, 30), np.zeros(30))
    j1 = eval_jacobian(model, d, rng.normal(size=4))
    j2 = eval_jacobian(model, d, rng.normal(size=4))
    assert np.max(np.abs(j1 - j2)) <= 1e-14


def test_non_finite_partial_reports_indices():
    model = ModelFunction(lambda y, x: np.sqrt(x[0] * y) + x[1], 2, "sqrt")
    with pytest.raises(EvaluationError) as exc:
        eval_jacobian(model, Dataset([1.0, 0.0], [0, 0]), [1.0, 0.0])
    assert (exc.value.index, exc.value.param_index) == (1, 0)


def test_cost_nonnegative_and_zero_iff_interpolating(rng):
    y = rng.uniform(0, 2, 15)
    x = np.array([0.7, -0.4, 0.1])
    exact = Dataset(y, exponential(y, x))
    assert eval_cost(eval_residuals(exponential, exact, x)) == 0.0
    noisy = Dataset(y, exact.z + 1e-3 * rng.normal(size=15))
    assert eval_cost(eval_residuals(exponential, noisy, x)) > 0.0


def test_builtin_lookup():
    assert builtin_model("polynomial:2").n_params == 3
    assert builtin_model("gaussian2d").n_params == 7
    with pytest.raises(ValueError):
        builtin_model("spline")
    with pytest.raises(ValueError):
        builtin_model("polynomial:x")


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        Dataset([1.0, np.nan], [1.0, 2.0])
