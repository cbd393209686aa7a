"""k-nearest-neighbor graphs and the kNN classifier.

Distances are Euclidean and computed by :func:`scipy.spatial.distance.cdist`.
Ties in distance are broken by the smaller index so graphs are
deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from randsdr.linalg import as_matrix, as_stream, gaussian_matrix, qr_orthonormalize

__all__ = [
    "NeighborGraph",
    "exact_knn",
    "rp_dimension",
    "rp_knn",
    "symmetrize",
    "knn_classify",
]


@dataclass(frozen=True)
class NeighborGraph:
    """Adjacency lists of a kNN graph.

    Before :func:`symmetrize` each list holds the ``k`` nearest *other*
    points in order of distance. Afterwards lists are sorted, symmetric
    and contain the node itself.
    """

    n: int
    neighbors: tuple
    symmetric: bool = False

    @property
    def k_h(self) -> np.ndarray:
        """Per-node neighbor count (including self once symmetrized)."""
        return np.array([len(nb) for nb in self.neighbors])

    def adjacency(self) -> np.ndarray:
        """Dense 0/1 adjacency matrix."""
        A = np.zeros((self.n, self.n))
        for i, nb in enumerate(self.neighbors):
            A[i, nb] = 1.0
        return A


def _nearest(dist, k):
    # stable argsort: equal distances keep index order
    order = np.argsort(dist, axis=1, kind="stable")
    return order[:, :k]


def exact_knn(X, k) -> NeighborGraph:
    """The ``k`` nearest other points of every row of ``X``."""
    X = as_matrix(X, "X")
    n = X.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must be in 1..n-1 = {n - 1}, got {k}")
    dist = cdist(X, X)
    np.fill_diagonal(dist, np.inf)
    idx = _nearest(dist, k)
    return NeighborGraph(n, tuple(np.array(row) for row in idx), symmetric=False)


def rp_dimension(n) -> int:
    """Target dimension ``ceil(20 log2 n)`` of the random projection."""
    return int(math.ceil(20.0 * math.log2(n)))


def rp_knn(X, k, rng=None) -> NeighborGraph:
    """Approximate kNN on a Gaussian random projection of the columns.

    The projection has orthonormal columns and dimension
    :func:`rp_dimension`; if ``p`` does not exceed it the exact graph is
    returned.
    """
    X = as_matrix(X, "X")
    n, p = X.shape
    m = rp_dimension(n)
    if p <= m:
        return exact_knn(X, k)
    omega = qr_orthonormalize(gaussian_matrix(p, m, as_stream(rng)), check_rank=False)
    return exact_knn(X @ omega, k)


def symmetrize(graph: NeighborGraph) -> NeighborGraph:
    """Union-symmetrize ``graph`` and add self-loops."""
    n = graph.n
    sets = [set(map(int, nb)) for nb in graph.neighbors]
    for i, nb in enumerate(graph.neighbors):
        for j in nb:
            sets[int(j)].add(i)
    for i in range(n):
        sets[i].add(i)
    return NeighborGraph(n, tuple(np.array(sorted(s), dtype=np.intp) for s in sets), symmetric=True)


def knn_classify(train_Z, labels, test_Z, k):
    """Majority vote of the ``k`` nearest training points.

    Vote ties go to the smallest class label.
    """
    train_Z = as_matrix(np.asarray(train_Z, float).reshape(len(train_Z), -1), "train_Z")
    test_Z = as_matrix(np.asarray(test_Z, float).reshape(len(test_Z), -1), "test_Z")
    labels = np.asarray(labels)
    if labels.shape[0] != train_Z.shape[0]:
        raise ValueError("labels and train_Z disagree in length")
    if not 1 <= k <= train_Z.shape[0]:
        raise ValueError(f"k must be in 1..{train_Z.shape[0]}")
    if train_Z.shape[1] != test_Z.shape[1]:
        raise ValueError("train_Z and test_Z must have the same number of columns")
    classes, codes = np.unique(labels, return_inverse=True)
    idx = _nearest(cdist(test_Z, train_Z), k)
    votes = np.zeros((test_Z.shape[0], classes.size), dtype=int)
    np.add.at(votes, (np.repeat(np.arange(idx.shape[0]), k), codes[idx].ravel()), 1)
    # argmax returns the first maximum, i.e. the smallest class
    return classes[np.argmax(votes, axis=1)]
