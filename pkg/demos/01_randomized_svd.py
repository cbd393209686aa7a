"""
Randomized SVD and power iterations
===================================

A low-rank signal buried in Gaussian noise, factored with a fixed
rank and an increasing number of power iterations.
"""
import numpy as np

from randsdr import RngStream, gen_lowrank_noise, randomized_svd_fixed
from randsdr.simgen import singular_value_error

# 400 x 1000 matrix, rank 20, signal starting at the noise edge
ds = gen_lowrank_noise(400, 1000, 20, kappa=1.0, rng=RngStream(1), noise_var=1.0)
X = ds.X
exact = np.linalg.svd(X, compute_uv=False)[:20]

# each extra power iteration sharpens the gap between signal and noise
for t in range(1, 6):
    res = randomized_svd_fixed(X, d=20, delta=10, t=t, rng=RngStream(1, t))
    print(f"t={t}  % singular value error {singular_value_error(res.S, exact):6.2f}")

# the error falls roughly geometrically, so log(error) is close to linear in t
