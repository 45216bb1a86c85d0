"""Nonlinear least-squares curve fitting with a trust region method.

Jacobians come from forward-mode automatic differentiation, trust region
steps from an SVD of the scaled Jacobian.
"""

from .datagen import (
    BenchmarkSpec,
    Gaussian2DParams,
    desk_scale_spec,
    canonical_params,
    gaussian2d,
    generate_dataset,
    full_scale_spec,
    pixel_grid,
)
from .dual import Dual
from .errors import (
    CapacityError,
    EvaluationError,
    FixedSizeExceededError,
    NotPositiveDefiniteError,
    NumericFailure,
    SingularFactorError,
    TrustFitError,
)
from .model import (
    Dataset,
    ModelFunction,
    builtin_model,
    eval_cost,
    eval_jacobian,
    eval_jacobian_fd,
    eval_residuals,
    exponential,
    gaussian2d_model,
    linear,
    polynomial,
)
from .padding import MaskedDataset, apply_mask, pad_and_mask
from .solver import FitOptions, FitResult, Status, fit
from .weights import WeightSpec

__version__ = "0.1.0"
