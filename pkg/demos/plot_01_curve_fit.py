"""
Fitting a curve with a trust region
===================================

A first look at :func:`trustfit.fit` on a decaying exponential.
"""

import numpy as np

import trustfit as tf

rng = np.random.default_rng(0)

# noisy samples of 1.5 exp(-0.7 y) + 0.2
y = np.linspace(0, 5, 80)
z = tf.exponential(y, [1.5, -0.7, 0.2]) + 0.02 * rng.normal(size=y.size)
data = tf.Dataset(y, z)

# a poor starting point; the radius keeps early steps honest
res = tf.fit(tf.exponential, data, x0=[4.0, -0.1, -1.0])
print(res.status.value, "after", res.iterations, "iterations")
print("x_opt =", np.round(res.x, 4))

# every accepted step lowers the cost
print("cost history:", np.array2string(np.array(res.cost_history), precision=4))

# the radius and LM shift chosen at each iteration
for k, (d, a, g) in enumerate(zip(res.delta_history, res.alpha_history, res.gamma_history), 1):
    print(f"{k:3d}  delta={d:9.4g}  alpha={a:9.4g}  gain={g:7.3f}")

###############################################################################
# Your own model
# --------------
# Any function of ``(y, x)`` written with numpy ufuncs works; derivatives come
# from forward-mode dual numbers, so no Jacobian needs to be supplied.

def logistic(y, x):
    return x[0] / (1 + np.exp(-x[1] * (y - x[2])))

model = tf.ModelFunction(logistic, 3, "logistic", ("height", "rate", "midpoint"))
z2 = logistic(y, [2.0, 3.0, 2.5]) + 0.01 * rng.normal(size=y.size)
res2 = tf.fit(model, tf.Dataset(y, z2), [1.0, 1.0, 2.0])
print(dict(zip(model.param_names, np.round(res2.x, 4))))
