"""
Locality preserving projections
===============================

Two noisy rings that overlap in every coordinate pair but separate
along a direction LPP can find.
"""
import numpy as np

from randsdr import RngStream, fit_lpp
from randsdr.knn import knn_classify
from randsdr.simgen import accuracy

gen = np.random.default_rng(7)
n, p = 300, 50
labels = np.repeat([0, 1], n // 2)
angle = gen.uniform(0, 2 * np.pi, n)
X = 0.5 * gen.standard_normal((n, p))
X[:, 0] += np.cos(angle) * (1 + 2 * labels)
X[:, 1] += np.sin(angle) * (1 + 2 * labels)

exact = fit_lpp(X, k=10, r=2)
fast = fit_lpp(X, k=10, r=2, mode="randomized", t=3, rng=RngStream(7))
print("locality eigenvalues", np.round(exact.eigenvalues, 3), "bandwidth", round(exact.info["bandwidth"], 3))

# nearest neighbors in the embedding, training on even rows
train, test = np.arange(0, n, 2), np.arange(1, n, 2)
for name, model in [("lpp", exact), ("rand.lpp", fast)]:
    Z = (X - model.means) @ model.G
    pred = knn_classify(Z[train], labels[train], Z[test], 5)
    print(f"{name:9s} kNN accuracy {accuracy(labels[test], pred):.2f}")
