"""Fit models, datasets, residuals, cost and Jacobians.

A model is a plain Python callable ``func(y, x)``.  ``y`` is the array of
independent-variable points (shape ``(v,)`` for scalar points, ``(v, d)`` for
coordinate tuples) and ``x`` is a sequence of the ``n`` fit parameters.  The
callable must only use arithmetic and numpy ufuncs so that it can be evaluated
over plain floats and over :class:`~trustfit.dual.Dual` numbers alike.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dual import jacobian_of, seed
from .errors import EvaluationError

__all__ = [
    "ModelFunction",
    "Dataset",
    "eval_model",
    "eval_residuals",
    "eval_cost",
    "eval_jacobian",
    "eval_jacobian_fd",
    "linear",
    "exponential",
    "polynomial",
    "gaussian2d_model",
    "builtin_model",
    "BUILTIN_MODELS",
]


@dataclass(frozen=True)
class ModelFunction:
    """A fit function ``h(y; x)`` with ``n_params`` parameters."""

    func: Callable
    n_params: int
    name: str = "model"
    param_names: tuple = field(default=())

    def __call__(self, y, x):
        return self.func(y, x)


@dataclass(frozen=True)
class Dataset:
    """Observed points ``y`` with values ``z``."""

    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        z = np.asarray(self.z, dtype=float).ravel()
        if y.ndim == 0 or y.ndim > 2:
            raise ValueError("y must be 1-D (scalar points) or 2-D (v, d)")
        if y.shape[0] != z.shape[0]:
            raise ValueError(f"y has {y.shape[0]} points but z has {z.shape[0]}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(z))):
            raise ValueError("dataset contains non-finite entries")
        y.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    def __len__(self):
        return self.z.shape[0]


def _check_params(model, x):
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.n_params:
        raise ValueError(f"{model.name} takes {model.n_params} parameters, got {x.size}")
    return x


def eval_model(model, y, x):
    """Evaluate ``model`` at every point of ``y``; returns shape ``(v,)``."""
    x = _check_params(model, x)
    v = np.shape(y)[0]
    with np.errstate(all="ignore"):
        out = np.broadcast_to(np.asarray(model(y, x), dtype=float), (v,))
    bad = ~np.isfinite(out)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise EvaluationError(f"{model.name} is non-finite at point {i}", index=i)
    return np.array(out)


def eval_residuals(model, data, x):
    """Residuals ``h(y_i, x) - z_i``."""
    return eval_model(model, data.y, x) - data.z


def eval_cost(r):
    """Half the sum of squared residuals."""
    r = np.asarray(r, dtype=float)
    return 0.5 * float(np.dot(r, r))


def eval_jacobian(model, data, x):
    """Exact ``(v, n)`` Jacobian of the residuals by forward-mode AD.

    All points are swept at once: each parameter is seeded as a dual with
    ``n`` derivative slots and the model is evaluated over the whole ``y``
    array.
    """
    x = _check_params(model, x)
    v, n = len(data), model.n_params
    with np.errstate(all="ignore"):
        out = model(data.y, seed(x))
        jac = jacobian_of(out, (v,), n)
    bad = ~np.isfinite(jac)
    if bad.any():
        i, j = (int(k) for k in np.argwhere(bad)[0])
        raise EvaluationError(
            f"{model.name} has a non-finite partial at point {i}, parameter {j}",
            index=i,
            param_index=j,
        )
    return jac


def eval_jacobian_fd(model, data, x, rel_step=1e-6):
    """Central finite-difference Jacobian, step ``rel_step * max(1, |x_j|)``.

    Only meant as an independent check on :func:`eval_jacobian`.
    """
    x = _check_params(model, x)
    jac = np.empty((len(data), x.size))
    for j in range(x.size):
        h = rel_step * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        jac[:, j] = (eval_model(model, data.y, xp) - eval_model(model, data.y, xm)) / (
            xp[j] - xm[j]
        )
    bad = ~np.isfinite(jac)
    if bad.any():
        i, j = (int(k) for k in np.argwhere(bad)[0])
        raise EvaluationError(
            f"non-finite difference at point {i}, parameter {j}", index=i, param_index=j
        )
    return jac


# built-in models ------------------------------------------------------------


def _linear(y, x):
    return x[0] * y + x[1]


def _exponential(y, x):
    return x[0] * np.exp(x[1] * y) + x[2]


def polynomial(degree):
    """Polynomial ``x0 + x1 y + ... + xk y^k`` of the given degree."""
    if degree < 0:
        raise ValueError("degree must be >= 0")

    def func(y, x):
        # Horner, highest coefficient last
        acc = x[degree] + 0.0 * y
        for k in range(degree - 1, -1, -1):
            acc = acc * y + x[k]
        return acc

    return ModelFunction(
        func, degree + 1, f"polynomial:{degree}", tuple(f"c{k}" for k in range(degree + 1))
    )


def _gaussian2d(y, x):
    from .datagen import gaussian2d

    return gaussian2d(y, x)


linear = ModelFunction(_linear, 2, "linear", ("slope", "intercept"))
exponential = ModelFunction(_exponential, 3, "exponential", ("amplitude", "rate", "offset"))
gaussian2d_model = ModelFunction(
    _gaussian2d,
    7,
    "gaussian2d",
    ("amplitude", "x0", "y0", "sigma_x", "sigma_y", "theta", "offset"),
)

BUILTIN_MODELS = {
    "linear": linear,
    "exponential": exponential,
    "gaussian2d": gaussian2d_model,
}


def builtin_model(name):
    """Look up a built-in model by name (``polynomial:k`` is accepted)."""
    if name in BUILTIN_MODELS:
        return BUILTIN_MODELS[name]
    if name.startswith("polynomial:"):
        try:
            degree = int(name.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad polynomial degree in {name!r}") from None
        return polynomial(degree)
    known = ", ".join([*BUILTIN_MODELS, "polynomial:k"])
    raise ValueError(f"unknown model {name!r} (known: {known})")

