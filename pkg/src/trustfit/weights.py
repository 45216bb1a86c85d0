"""Per-point errors and full covariances, handled by whitening.

Once residuals and Jacobian are whitened with ``L^{-1}`` (``C = L L^T``) the
weighted problem has exactly the unweighted form, so the solver itself never
sees the weights.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError
from .linalg import cholesky, solve_lower_triangular

__all__ = ["WeightSpec", "Whitener", "prepare", "whiten", "COVARIANCE_LIMIT"]

COVARIANCE_LIMIT = 10_000


@dataclass(frozen=True)
class WeightSpec:
    """``none``, ``diagonal`` (error vector ``S``) or ``covariance`` (matrix ``C``)."""

    kind: str = "none"
    values: np.ndarray = None

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def diagonal(cls, sigma):
        sigma = np.asarray(sigma, dtype=float).ravel()
        if not np.all(np.isfinite(sigma)) or np.any(sigma <= 0):
            raise ValueError("errors must be finite and strictly positive")
        return cls("diagonal", sigma)

    @classmethod
    def covariance(cls, C):
        C = np.asarray(C, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise ValueError("covariance must be a square matrix")
        return cls("covariance", C)

    def __len__(self):
        return 0 if self.values is None else self.values.shape[0]


@dataclass(frozen=True)
class Whitener:
    kind: str
    inv_sigma: np.ndarray = None
    L: np.ndarray = None

    def __call__(self, r, J=None):
        return whiten(self, r, J)


def prepare(weights=None, limit=COVARIANCE_LIMIT):
    """Factor the weights once, before iterating."""
    if weights is None or weights.kind == "none":
        return Whitener("none")
    if weights.kind == "diagonal":
        return Whitener("diagonal", inv_sigma=1.0 / weights.values)
    if weights.kind == "covariance":
        v = weights.values.shape[0]
        if limit is not None and v > limit:
            raise CapacityError(
                f"full covariance with {v} points exceeds the limit of {limit}; "
                "use per-point errors or raise the limit"
            )
        return Whitener("covariance", L=cholesky(weights.values))
    raise ValueError(f"unknown weight kind {weights.kind!r}")


def whiten(whitener, r, J=None):
    """Return ``(L^{-1} r, L^{-1} J)``; ``J`` may be ``None``."""
    if whitener.kind == "none":
        return r, J
    if whitener.kind == "diagonal":
        w = whitener.inv_sigma
        return r * w, None if J is None else J * w[:, None]
    rt = solve_lower_triangular(whitener.L, r)
    Jt = None if J is None else solve_lower_triangular(whitener.L, J)
    return rt, Jt
