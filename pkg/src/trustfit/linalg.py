"""Dense kernels used by the trust region solver.

The SVD is a one-sided Jacobi sweep applied to the small ``n x n`` triangular
factor of a Householder QR of the tall Jacobian.  Only ``Sigma``, ``V`` and
the projection ``U^T r`` are kept; the thin ``U`` is built on request.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack
from scipy.linalg import solve_triangular

from .errors import NotPositiveDefiniteError, NumericFailure, SingularFactorError

__all__ = [
    "RANK_RTOL",
    "SvdFactors",
    "svd",
    "jacobi_svd",
    "cholesky",
    "solve_lower_triangular",
]

#: singular values below ``RANK_RTOL * s_max`` are treated as zero
RANK_RTOL = np.finfo(float).eps ** (2.0 / 3.0)

_MAX_SWEEPS = 60


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``J = U diag(s) V^T`` reduced to what the step solver needs.

    Attributes:
        s: singular values, descending.
        V: right singular vectors as columns, ``(n, n)``.
        Utr: ``U^T r`` for the residual passed to :func:`svd` (zeros if none).
        U: thin left singular vectors, only when requested.
    """

    s: np.ndarray
    V: np.ndarray
    Utr: np.ndarray
    U: np.ndarray = None

    @property
    def rank_cutoff(self):
        return RANK_RTOL * (self.s[0] if self.s.size else 0.0)

    @property
    def full_rank(self):
        return bool(self.s.size) and self.s[-1] > self.rank_cutoff


def jacobi_svd(A, tol=None):
    """One-sided Jacobi SVD of a square or tall matrix ``A``.

    Returns ``(W, s, V)`` with ``A = W diag(s) V^T`` where ``W`` has the
    normalized rotated columns (zero where ``s == 0``), ``s`` descending.
    """
    A = np.array(A, dtype=float)
    m, n = A.shape
    V = np.eye(n)
    if tol is None:
        tol = np.finfo(float).eps * max(m, 1)
    for _ in range(_MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                ap, aq = A[:, p], A[:, q]
                alpha = ap @ ap
                beta = aq @ aq
                gamma = ap @ aq
                if alpha == 0.0 or beta == 0.0:
                    continue
                if abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.hypot(1.0, t)
                sn = c * t
                A[:, [p, q]] = np.column_stack((c * ap - sn * aq, sn * ap + c * aq))
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - sn * vq
                V[:, q] = sn * vp + c * vq
        if not rotated:
            break
    else:
        raise NumericFailure(f"Jacobi SVD did not converge in {_MAX_SWEEPS} sweeps")

    s = np.linalg.norm(A, axis=0)
    order = np.argsort(-s, kind="stable")
    s, A, V = s[order], A[:, order], V[:, order]
    W = np.zeros_like(A)
    nz = s > 0
    W[:, nz] = A[:, nz] / s[nz]
    return W, s, V


def svd(J, r=None, compute_u=False):
    """Thin SVD of a tall ``(v, n)`` matrix, plus ``U^T r``.

    Args:
        J: matrix with ``v >= n``.
        r: optional vector of length ``v`` to project onto the left
            singular vectors.
        compute_u: also return the explicit thin ``U`` (``v x n``).
    """
    J = np.asarray(J, dtype=float)
    if J.ndim != 2:
        raise ValueError("J must be 2-D")
    v, n = J.shape
    if v < n:
        raise ValueError(f"need at least as many rows as columns, got {J.shape}")
    if not np.all(np.isfinite(J)):
        raise NumericFailure("SVD input contains non-finite entries")
    Q, R = np.linalg.qr(J, mode="reduced")
    W, s, V = jacobi_svd(R)
    if r is None:
        Utr = np.zeros(n)
    else:
        Utr = W.T @ (Q.T @ np.asarray(r, dtype=float))
    U = Q @ W if compute_u else None
    return SvdFactors(s=s, V=V, Utr=Utr, U=U)


def cholesky(C, sym_tol=1e-12):
    """Lower Cholesky factor ``L`` of a symmetric positive-definite ``C``."""
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("covariance must be square")
    if not np.all(np.isfinite(C)):
        raise ValueError("covariance contains non-finite entries")
    scale = max(1.0, float(np.max(np.abs(C)))) if C.size else 1.0
    if np.max(np.abs(C - C.T), initial=0.0) > sym_tol * scale:
        raise ValueError("covariance is not symmetric")
    L, info = lapack.dpotrf(C, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(info - 1)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    return L


def solve_lower_triangular(L, B):
    """Forward substitution for ``L X = B`` (``B`` a vector or matrix)."""
    L = np.asarray(L, dtype=float)
    diag = np.diagonal(L)
    zero = np.flatnonzero(diag == 0.0)
    if zero.size:
        raise SingularFactorError(int(zero[0]))
    return solve_triangular(L, B, lower=True, check_finite=False)
