"""
Inside one trust-region step
============================

The step is found from the SVD of the scaled Jacobian.  When the plain
Gauss-Newton step is too long, a shift ``alpha`` is searched for so that the
step lands on the radius.
"""

import numpy as np

from trustfit.linalg import svd
from trustfit.subproblem import phi_and_derivative, solve_shifted, solve_trust_region_step

rng = np.random.default_rng(3)
J = rng.normal(size=(40, 4)) * [1.0, 5.0, 0.2, 2.0]
r = rng.normal(size=40)
f = svd(J, r)
print("singular values", np.round(f.s, 4))

p_gn = solve_shifted(f, 0.0)
print("Gauss-Newton step length", np.linalg.norm(p_gn))

# a radius large enough admits the Gauss-Newton step unchanged
step = solve_trust_region_step(f, 2 * np.linalg.norm(p_gn))
print("alpha", step.alpha, "on boundary", step.on_boundary)

# a small radius forces a positive shift
delta = 0.3 * np.linalg.norm(p_gn)
step = solve_trust_region_step(f, delta)
print(f"alpha={step.alpha:.5g} after {step.iterations} iterations, |p|/delta={np.linalg.norm(step.p) / delta:.4f}")
for alpha, phi in step.trace:
    print(f"   alpha={alpha:.5g}  phi={phi:+.3e}")

# phi(alpha) = |p(alpha)| - delta falls monotonically towards -delta
for alpha in (0.0, step.alpha, 10 * step.alpha, 1e6):
    print(f"phi({alpha:.4g}) = {phi_and_derivative(f, delta, alpha)[0]:+.4f}")
