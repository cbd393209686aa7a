"""
Choosing the rank and the number of power iterations
====================================================

Stability scores locate the rank for a given t; Bi-Cross-Validation
picks t.
"""
import numpy as np

from randsdr import RngStream, adaptive_randomized_svd, gen_lowrank_noise
from randsdr.select import bicv_curve, stability_scores

ds = gen_lowrank_noise(300, 600, 8, kappa=2.0, rng=RngStream(3))
X = ds.X
print("true rank", ds.truth["d_star"])

# directions that carry signal give nearly the same eigenvector under
# different random projections; noise directions do not
profile = stability_scores(X, t=2, d_max=20, rng=RngStream(3, 1))
print("stability scores", np.round(profile.scores, 2))
# weak directions mix under projection, so the change point can land
# a little above the true rank
print("change point rank", profile.d_hat)

# held-out reconstruction error of a 2 x 2 Gabriel split, per t
for report in bicv_curve(X, t_max=4, d_max=20, rng=RngStream(3, 2)):
    print(f"t={report.t}  BiCV error {report.bicv_error:10.4f}  rank {report.d_hat}")

# both choices at once
res = adaptive_randomized_svd(X, t_max=4, d_max=20, rng=RngStream(3, 3))
print("selected rank", res.rank_est, "power iterations", res.power_iters)
