"""Trust region method for nonlinear least squares.

Each iteration works in the scaled space ``p = D w`` where ``D`` holds running
maxima of the Jacobian column norms, so the trust region is an ellipsoid in
the original parameters:

1. SVD of the scaled Jacobian ``J D^{-1}`` (see :mod:`trustfit.linalg`).
2. Gauss-Newton step if it fits inside the radius, otherwise the boundary
   step from the Levenberg-Marquardt parameter iteration.
3. Gain ratio of actual to predicted reduction decides acceptance and the
   new radius.
"""

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError, NumericFailure
from .linalg import svd
from .model import eval_cost, eval_jacobian, eval_model
from .padding import MaskedDataset, apply_mask, pad_and_mask
from .subproblem import DEFAULT_MAX_ITER, DEFAULT_SIGMA, solve_trust_region_step
from .weights import COVARIANCE_LIMIT, WeightSpec, prepare, whiten

__all__ = [
    "Status",
    "FitOptions",
    "FitResult",
    "TrustRegionState",
    "quadratic_model_decrease",
    "gain_ratio",
    "apply_update",
    "compute_scaling",
    "initial_radius",
    "fit",
]

EPS = np.finfo(float).eps


class Status(str, enum.Enum):
    CONVERGED_FTOL = "converged-ftol"
    CONVERGED_XTOL = "converged-xtol"
    CONVERGED_GTOL = "converged-gtol"
    MAX_ITERATIONS = "max-iterations"
    NUMERIC_FAILURE = "numeric-failure"

    @property
    def converged(self):
        return self.value.startswith("converged")


@dataclass(frozen=True)
class FitOptions:
    """Solver settings.

    ``max_iterations`` defaults to ``100 * n``; ``delta0`` overrides the
    initial radius ``||D x0||``; ``fixed_size`` pads the data to that many
    points and masks the padding out.
    """

    ftol: float = 1e-8
    xtol: float = 1e-8
    gtol: float = 1e-8
    max_iterations: int = None
    delta0: float = None
    fixed_size: int = None
    subproblem_sigma: float = DEFAULT_SIGMA
    lm_max_iter: int = DEFAULT_MAX_ITER
    covariance_limit: int = COVARIANCE_LIMIT

    def __post_init__(self):
        for name in ("ftol", "xtol", "gtol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.delta0 is not None and not self.delta0 > 0:
            raise ValueError("delta0 must be positive")
        if self.fixed_size is not None and self.fixed_size < 1:
            raise ValueError("fixed_size must be positive")


@dataclass
class TrustRegionState:
    x: np.ndarray
    delta: float
    D: np.ndarray
    cost: float
    gradient: np.ndarray
    iteration: int = 0
    n_model_evals: int = 0
    n_jacobian_evals: int = 0


@dataclass
class FitResult:
    """Outcome of :func:`fit`.

    ``residuals`` are the weighted residuals at ``x`` over the real data
    points.  The ``*_history`` lists have one entry per trial step, except
    ``cost_history`` which lists the cost at the seed and at every accepted
    iterate.
    """

    x: np.ndarray
    cost: float
    residuals: np.ndarray
    status: Status
    iterations: int
    n_model_evals: int
    n_jacobian_evals: int
    accepted_steps: int = 0
    message: str = ""
    cost_history: list = field(default_factory=list)
    delta_history: list = field(default_factory=list)
    alpha_history: list = field(default_factory=list)
    gamma_history: list = field(default_factory=list)
    step_norm_history: list = field(default_factory=list)
    lm_iterations: list = field(default_factory=list)
    lm_degraded: int = 0
    timings: dict = field(default_factory=dict)

    @property
    def success(self):
        return self.status.converged


def quadratic_model_decrease(ghat, factors, p):
    """Predicted reduction ``m(0) - m(p)`` using ``J^T J = V S^2 V^T``."""
    sv = factors.s * (factors.V.T @ p)
    return -(float(ghat @ p) + 0.5 * float(sv @ sv))


def gain_ratio(f_old, f_new, predicted):
    """Actual over predicted reduction; zero when no reduction is predicted."""
    if predicted <= EPS * f_old or predicted <= 0.0:
        return 0.0
    return (f_old - f_new) / predicted


def apply_update(state, p, w, gamma, improved=None):
    """Accept or reject the step and adapt the radius.

    Returns ``(x, delta, accepted)``.  ``improved`` (the actual cost went
    down) defaults to ``gamma > 0``; a step that does not lower the cost is
    never accepted.
    """
    if improved is None:
        improved = gamma > 0
    if gamma > 0.75 and improved:
        return state.x + w, 2.0 * state.delta, True
    if 0.25 <= gamma <= 0.75 and improved:
        return state.x + w, state.delta, True
    return state.x, 0.25 * float(np.linalg.norm(p)), False


def compute_scaling(J, D_prev=None):
    """Running maximum of the Jacobian column norms."""
    norms = np.linalg.norm(J, axis=0)
    if D_prev is None:
        return np.where(norms > 0, norms, 1.0)
    return np.maximum(D_prev, norms)


def initial_radius(D, x0):
    r = float(np.linalg.norm(D * x0))
    return r if r > 0 else 1.0


class _Problem:
    """Residual and Jacobian evaluation with masking and whitening applied."""

    def __init__(self, model, data, weights, options):
        self.model = model
        if isinstance(data, MaskedDataset):
            padded = data
        elif options.fixed_size:
            padded = pad_and_mask(data, options.fixed_size)
        else:
            padded = None
        if padded is None:
            self.points, self.mask, self.v = data, None, len(data)
        else:
            self.points, self.mask, self.v = padded, padded.mask, padded.v
        self.whitener = prepare(
            _pad_weights(weights, self.v, len(self.points)), options.covariance_limit
        )
        self.timings = {"residual": 0.0, "jacobian": 0.0, "svd": 0.0, "subproblem": 0.0}
        self.n_model_evals = 0
        self.n_jacobian_evals = 0

    def residuals(self, x):
        t = time.perf_counter()
        self.n_model_evals += 1
        try:
            r = eval_model(self.model, self.points.y, x) - self.points.z
            if self.mask is not None:
                r = apply_mask(r, self.mask)
            r, _ = whiten(self.whitener, r)
        finally:
            self.timings["residual"] += time.perf_counter() - t
        return r

    def jacobian(self, x):
        t = time.perf_counter()
        self.n_jacobian_evals += 1
        try:
            J = eval_jacobian(self.model, self.points, x)
            if self.mask is not None:
                J = apply_mask(J, self.mask)
            _, J = whiten(self.whitener, np.zeros(J.shape[0]), J)
        finally:
            self.timings["jacobian"] += time.perf_counter() - t
        return J

    def real(self, r):
        return r if self.mask is None else r[: self.v]


def _pad_weights(weights, v, s):
    if weights is None or weights.kind == "none":
        return weights
    if len(weights) != v:
        raise ValueError(f"weights describe {len(weights)} points but data has {v}")
    if s == v:
        return weights
    if weights.kind == "diagonal":
        return WeightSpec.diagonal(np.concatenate([weights.values, np.ones(s - v)]))
    C = np.eye(s)
    C[:v, :v] = weights.values
    return WeightSpec.covariance(C)


def fit(model, data, x0, options=None, weights=None, **overrides):
    """Minimise ``0.5 * ||r(x)||^2`` for ``model`` on ``data`` starting at ``x0``.

    Args:
        model: a :class:`~trustfit.model.ModelFunction`.
        data: a :class:`~trustfit.model.Dataset` or an already padded
            :class:`~trustfit.padding.MaskedDataset`.
        x0: starting parameters, length ``model.n_params``.
        options: :class:`FitOptions`; keyword ``overrides`` replace fields.
        weights: optional :class:`~trustfit.weights.WeightSpec`.

    Returns:
        FitResult
    """
    if options is None:
        options = FitOptions(**overrides)
    elif overrides:
        options = FitOptions(**{**options.__dict__, **overrides})
    x0 = np.array(x0, dtype=float).ravel()
    n = model.n_params
    if x0.size != n:
        raise ValueError(f"{model.name} takes {n} parameters, got {x0.size}")
    if len(data) < n:
        raise ValueError(f"need at least {n} data points, got {len(data)}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    max_iter = options.max_iterations or 100 * n
    sigma = options.subproblem_sigma
    t_start = time.perf_counter()

    prob = _Problem(model, data, weights, options)
    res = FitResult(
        x=x0, cost=np.nan, residuals=None, status=Status.NUMERIC_FAILURE,
        iterations=0, n_model_evals=0, n_jacobian_evals=0,
    )

    try:
        r = prob.residuals(x0)
        J = prob.jacobian(x0)
    except EvaluationError as exc:
        res.message = f"model failed at the seed: {exc}"
        return _finish(res, prob, t_start)

    D = compute_scaling(J)
    state = TrustRegionState(
        x=x0,
        delta=options.delta0 or initial_radius(D, x0),
        D=D,
        cost=eval_cost(r),
        gradient=J.T @ r,
    )
    res.cost_history.append(state.cost)
    status = None
    message = ""

    while state.iteration < max_iter:
        g = state.gradient
        if np.max(np.abs(g)) <= options.gtol:
            status, message = Status.CONVERGED_GTOL, "gradient below gtol"
            break

        t = time.perf_counter()
        try:
            factors = svd(J / state.D, r)
        except NumericFailure as exc:
            status, message = Status.NUMERIC_FAILURE, str(exc)
            break
        finally:
            prob.timings["svd"] += time.perf_counter() - t

        t = time.perf_counter()
        step = solve_trust_region_step(factors, state.delta, sigma, options.lm_max_iter)
        prob.timings["subproblem"] += time.perf_counter() - t

        p = step.p
        w = p / state.D
        ghat = g / state.D
        predicted = quadratic_model_decrease(ghat, factors, p)
        x_trial = state.x + w
        state.iteration += 1
        try:
            r_trial = prob.residuals(x_trial)
        except EvaluationError as exc:
            status, message = Status.NUMERIC_FAILURE, f"model failed at a trial step: {exc}"
            break
        f_trial = eval_cost(r_trial)
        gamma = gain_ratio(state.cost, f_trial, predicted)
        _, delta_next, accepted = apply_update(
            state, p, w, gamma, improved=f_trial < state.cost
        )

        res.delta_history.append(state.delta)
        res.alpha_history.append(step.alpha)
        res.gamma_history.append(gamma)
        res.step_norm_history.append(float(np.linalg.norm(p)))
        res.lm_iterations.append(step.iterations)
        res.lm_degraded += int(step.degraded)

        f_old = state.cost
        ftol_hit = (
            predicted <= options.ftol * f_old and abs(f_old - f_trial) <= options.ftol * f_old
        )
        xtol_hit = np.linalg.norm(w) <= options.xtol * (options.xtol + np.linalg.norm(state.x))

        if accepted:
            try:
                J_new = prob.jacobian(x_trial)
            except EvaluationError as exc:
                state.x, state.cost, r = x_trial, f_trial, r_trial
                res.accepted_steps += 1
                res.cost_history.append(f_trial)
                status, message = Status.NUMERIC_FAILURE, f"Jacobian failed: {exc}"
                break
            state.x, state.cost, r, J = x_trial, f_trial, r_trial, J_new
            state.gradient = J.T @ r
            state.D = compute_scaling(J, state.D)
            res.accepted_steps += 1
            res.cost_history.append(f_trial)
        state.delta = delta_next

        if ftol_hit:
            status, message = Status.CONVERGED_FTOL, "relative cost reduction below ftol"
            break
        if xtol_hit:
            status, message = Status.CONVERGED_XTOL, "step below xtol"
            break
    else:
        status, message = Status.MAX_ITERATIONS, f"reached {max_iter} iterations"

    res.x = state.x
    res.cost = state.cost
    res.residuals = prob.real(r)
    res.status = status
    res.message = message
    res.iterations = state.iteration
    return _finish(res, prob, t_start)


def _finish(res, prob, t_start):
    res.n_model_evals = prob.n_model_evals
    res.n_jacobian_evals = prob.n_jacobian_evals
    res.timings = dict(prob.timings, total=time.perf_counter() - t_start)
    return res
