"""
Benchmark of 2D Gaussian images
===============================

Generate noisy rotated Gaussians at a few sizes, fit each from a nearby
start and summarise convergence and per-phase timing.
"""

import tempfile

import numpy as np

import trustfit as tf
from trustfit.cli import run_benchmark
from trustfit.datagen import canonical_params, generate_image, iter_images, write_dataset

spec = tf.BenchmarkSpec(lengths=(900, 2500, 6400), images_per_length=4, rng_seed=1)

# one image, fitted by hand
img = generate_image(spec, 1, 0)
truth = img.truth.as_array()
res = tf.fit(tf.gaussian2d_model, img.dataset(), truth * 1.15)
print("truth ", np.round(truth, 3))
print("fitted", np.round(canonical_params(res.x).as_array(), 3))

# the whole set through the benchmark harness
with tempfile.TemporaryDirectory() as out:
    write_dataset(iter_images(spec), out, spec)
    for row in run_benchmark(out, repeats=2):
        phases = ", ".join(f"{p}={row[f'mean_{p}_s'] * 1e3:.2f}ms"
                           for p in ("residual", "jacobian", "svd", "subproblem"))
        print(f"v={row['v']:5d}  total={row['mean_total_s'] * 1e3:6.2f}ms  {phases}  "
              f"converged={row['converged_fraction']:.0%}")
