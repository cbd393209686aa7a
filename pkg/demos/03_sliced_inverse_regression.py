"""
Sliced inverse regression on a latent factor model
==================================================

Exact and randomized SIR and LSIR against PCA, scored on fresh data
from the same model.
"""
import numpy as np

from randsdr import RngStream, fit_lsir, fit_pca, fit_sir, gen_latent_factor, transform
from randsdr.simgen import aedr, latent_factor_sample, mspe_r2

ds = gen_latent_factor(250, 1000, rng=RngStream(5))
X, y, truth = ds.X, ds.y, ds.truth
X_test, y_test = latent_factor_sample(truth, 250, RngStream(5, 1))
print("latent dimension", truth["d_star"])

fits = {
    "sir": fit_sir(X, y, H=10, r=1),
    "rand.sir": fit_sir(X, y, H=10, r=1, mode="randomized", d=1, rng=RngStream(5, 2)),
    "lsir": fit_lsir(X, y, H=10, k=10, r=1),
    "rand.lsir": fit_lsir(X, y, H=10, k=10, r=1, mode="randomized", d=1, rng=RngStream(5, 3)),
    "pca": fit_pca(X, r=1),
}

# regress y on the one-dimensional projection, score on the test set
for name, model in fits.items():
    mspe, r2 = mspe_r2(transform(model, X), y, transform(model, X_test), y_test)
    print(f"{name:10s} R2 {r2:5.2f}  MSPE {mspe:8.2f}  AEDR {aedr(truth['b_true'], model.G):5.2f}")

# with p much larger than n the randomized variants usually come out ahead
