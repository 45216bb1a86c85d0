"""
Measurement errors and fixed-size buffers
=========================================

Per-point errors or a full covariance turn the fit into weighted least
squares.  Padding to a fixed size leaves the answer untouched.
"""

import numpy as np

import trustfit as tf

rng = np.random.default_rng(4)
v = 60
y = np.linspace(0, 3, v)
S = rng.uniform(0.02, 0.3, v)
z = tf.exponential(y, [1.3, -0.9, 0.25]) + S * rng.normal(size=v)
data = tf.Dataset(y, z)
x0 = [1.0, -0.5, 0.0]

plain = tf.fit(tf.exponential, data, x0)
diag = tf.fit(tf.exponential, data, x0, weights=tf.WeightSpec.diagonal(S))
cov = tf.fit(tf.exponential, data, x0, weights=tf.WeightSpec.covariance(np.diag(S**2)))
print("unweighted ", np.round(plain.x, 5))
print("diagonal   ", np.round(diag.x, 5))
print("covariance ", np.round(cov.x, 5))

# correlated errors need the dense form
idx = np.arange(v)
C = 0.02 * 0.7 ** np.abs(idx[:, None] - idx[None, :])
corr = tf.fit(tf.exponential, data, x0, weights=tf.WeightSpec.covariance(C))
print("correlated ", np.round(corr.x, 5))

###############################################################################
# Padding
# -------
# Dummy points repeat the last sample and are masked out of the cost, so the
# padded fit takes the same path as the original.

padded = tf.fit(tf.exponential, data, x0, fixed_size=128)
print("padded to 128:", np.max(np.abs(padded.x - plain.x)), "max difference")
print("iterations", plain.iterations, padded.iterations)
