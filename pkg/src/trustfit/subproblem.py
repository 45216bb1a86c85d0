"""Trust region step in the scaled space, solved through the SVD.

With ``J = U diag(s) V^T`` and ``c = U^T r`` the shifted normal equations
``(J^T J + alpha I) p = -J^T r`` have the closed form

    p(alpha) = -V [s_i c_i / (s_i^2 + alpha)]_i

so every trial value of the Levenberg-Marquardt parameter costs O(n^2).
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LmIterationState",
    "StepSolution",
    "solve_shifted",
    "phi_and_derivative",
    "solve_lm_parameter",
    "solve_trust_region_step",
]

DEFAULT_SIGMA = 0.01
DEFAULT_MAX_ITER = 10


@dataclass
class LmIterationState:
    alpha: float
    lower: float
    upper: float
    phi: float
    phi_prime: float
    iterations: int = 0


@dataclass
class StepSolution:
    """Scaled step ``p`` for shift ``alpha``.

    ``degraded`` is set when the alpha iteration hit its cap before the
    boundary accuracy was reached.
    """

    p: np.ndarray
    alpha: float
    on_boundary: bool
    iterations: int = 0
    degraded: bool = False
    trace: list = field(default_factory=list)


def _coefficients(factors, alpha):
    s, c = factors.s, factors.Utr
    if alpha == 0.0:
        keep = s > factors.rank_cutoff
        coef = np.zeros_like(s)
        coef[keep] = c[keep] / s[keep]
        return coef, keep
    return s * c / (s * s + alpha), np.ones(s.shape, dtype=bool)


def solve_shifted(factors, alpha):
    """Solve ``(J^T J + alpha I) p = -J^T r``.

    At ``alpha = 0`` singular values under the rank cutoff are dropped, which
    gives the minimum-norm least-squares step.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    coef, _ = _coefficients(factors, float(alpha))
    return -(factors.V @ coef)


def phi_and_derivative(factors, delta, alpha):
    """Boundary defect ``||p(alpha)|| - delta`` and its derivative in alpha."""
    alpha = float(alpha)
    s, c = factors.s, factors.Utr
    coef, keep = _coefficients(factors, alpha)
    # V is orthonormal, so ||p|| is the norm of the coefficients
    p_norm = float(np.linalg.norm(coef))
    phi = p_norm - delta
    if p_norm == 0.0:
        return -delta, 0.0
    sk, ck = s[keep], c[keep]
    denom = sk * sk + alpha
    phi_prime = -float(np.sum(sk * sk * ck * ck / denom**3)) / p_norm
    return phi, phi_prime


def _ghat_norm(factors):
    # J^T r = V diag(s) c
    return float(np.linalg.norm(factors.s * factors.Utr))


def solve_lm_parameter(
    factors, delta, sigma=DEFAULT_SIGMA, max_iter=DEFAULT_MAX_ITER, alpha0=0.0
):
    """Find ``alpha > 0`` with ``| ||p(alpha)|| - delta | <= sigma * delta``.

    Safeguarded Newton iteration on the boundary defect.  The caller has
    already established that the unshifted step is longer than ``delta``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not 0.0 < sigma < 1.0:
        raise ValueError("sigma must lie in (0, 1)")

    upper = _ghat_norm(factors) / delta
    alpha = float(alpha0)
    if alpha == 0.0 and not factors.full_rank:
        alpha = 0.001 * upper
    phi, dphi = phi_and_derivative(factors, delta, alpha)
    # ||p(alpha)|| is convex and decreasing, so the Newton root is a lower bound
    lower = max(0.0, alpha - phi / dphi) if dphi < 0 else 0.0
    state = LmIterationState(alpha, lower, upper, phi, dphi)
    trace = [(alpha, phi)]
    best = (abs(phi), alpha)

    while abs(phi) > sigma * delta:
        if state.iterations >= max_iter:
            break
        if dphi < 0:
            ratio = phi / dphi
            state.lower = max(state.lower, alpha - ratio)
            if phi < 0:
                state.upper = alpha
            trial = alpha - ((phi + delta) / delta) * ratio
        else:
            if phi < 0:
                state.upper = alpha
            trial = -1.0
        if not state.lower <= trial <= state.upper:
            trial = max(0.001 * state.upper, np.sqrt(state.lower * state.upper))
        alpha = float(trial)
        phi, dphi = phi_and_derivative(factors, delta, alpha)
        state.iterations += 1
        state.alpha, state.phi, state.phi_prime = alpha, phi, dphi
        trace.append((alpha, phi))
        if abs(phi) < best[0]:
            best = (abs(phi), alpha)

    degraded = abs(phi) > sigma * delta
    if degraded:
        alpha = best[1]
    p = solve_shifted(factors, alpha)
    p_norm = float(np.linalg.norm(p))
    if p_norm > delta * (1.0 + sigma):
        # keep the step feasible even when the iteration fell short
        p *= delta / p_norm
        p_norm = delta
    return StepSolution(
        p=p,
        alpha=alpha,
        on_boundary=abs(p_norm - delta) <= sigma * delta,
        iterations=state.iterations,
        degraded=degraded,
        trace=trace,
    )


def solve_trust_region_step(factors, delta, sigma=DEFAULT_SIGMA, max_iter=DEFAULT_MAX_ITER):
    """Unshifted step if it fits inside ``delta``, otherwise the boundary step."""
    p = solve_shifted(factors, 0.0)
    p_norm = float(np.linalg.norm(p))
    if p_norm <= delta:
        return StepSolution(
            p=p, alpha=0.0, on_boundary=abs(p_norm - delta) <= sigma * delta
        )
    return solve_lm_parameter(factors, delta, sigma=sigma, max_iter=max_iter)
