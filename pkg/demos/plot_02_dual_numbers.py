"""
Jacobians from dual numbers
===========================

How the forward-mode derivatives behind every fit are formed, and how they
compare with finite differences.
"""

import numpy as np

from trustfit import Dataset, exponential
from trustfit.dual import Dual, jacobian_of, seed
from trustfit.model import eval_jacobian, eval_jacobian_fd

# a dual carries a value and a vector of partial derivatives
a = Dual(2.0, np.array([1.0, 0.0]))
b = Dual(3.0, np.array([0.0, 1.0]))
c = np.exp(a) * b
print("value", c.value, "gradient", c.deriv)  # e^2 * 3, (e^2 * 3, e^2)

# seeding the parameter vector gives the whole Jacobian in one sweep
y = np.linspace(0, 2, 5)
x = np.array([1.0, -0.5, 0.3])
out = exponential(y, seed(x))
print(jacobian_of(out, y.shape, 3))

# the library helpers agree with central differences
data = Dataset(y, np.zeros_like(y))
ad = eval_jacobian(exponential, data, x)
fd = eval_jacobian_fd(exponential, data, x)
print("max |AD - FD| =", np.max(np.abs(ad - fd)))
