"""Locality preserving projections.

LPP keeps neighboring points close after a linear map. With a heat
kernel graph ``W`` and degrees ``D`` it solves the pencil

    X^T W X e = mu X^T D X e

for the largest ``mu`` (``mu = 1 - lambda`` of the graph Laplacian),
after dropping the trivial solution whose image is the constant
vector.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from randsdr import knn
from randsdr.linalg import LinAlgError, as_matrix, as_stream, dense_svd, gaussian_matrix, qr_orthonormalize, symmetric_eig
from randsdr.rsvd import DEFAULT_OVERSAMPLING
from randsdr.sdr import EdrModel, center_columns

__all__ = ["HeatKernelGraph", "heat_kernel_graph", "fit_lpp", "TRIVIAL_COSINE"]

TRIVIAL_COSINE = 0.999
DEFAULT_POWER_ITERS = 2


@dataclass(frozen=True)
class HeatKernelGraph:
    W: sparse.csr_matrix
    degrees: np.ndarray
    bandwidth: float

    def normalized(self) -> sparse.csr_matrix:
        """``D^-1/2 W D^-1/2``."""
        s = sparse.diags(1.0 / np.sqrt(self.degrees))
        return (s @ self.W @ s).tocsr()


def heat_kernel_graph(X, k, b=None, use_rp=False, rng=None, squared=False) -> HeatKernelGraph:
    """Symmetrized kNN graph with weights ``exp(-||x_i - x_j|| / b)``.

    ``b`` defaults to the median edge length. ``squared=True`` uses the
    squared distance in the exponent instead.
    """
    X = as_matrix(X, "X")
    n = X.shape[0]
    graph = knn.rp_knn(X, k, rng) if use_rp else knn.exact_knn(X, k)
    graph = knn.symmetrize(graph)
    rows = np.concatenate([np.full(len(nb), i) for i, nb in enumerate(graph.neighbors)])
    cols = np.concatenate(graph.neighbors)
    off = rows != cols
    rows, cols = rows[off], cols[off]
    dist = np.linalg.norm(X[rows] - X[cols], axis=1)
    if squared:
        dist = dist ** 2
    if b is None:
        b = float(np.median(dist)) if dist.size else 1.0
        if b <= 0:
            b = 1.0
    if not b > 0:
        raise ValueError("bandwidth b must be positive")
    W = sparse.csr_matrix((np.exp(-dist / b), (rows, cols)), shape=(n, n))
    W = (0.5 * (W + W.T)).tocsr()
    degrees = np.asarray(W.sum(axis=1)).ravel()
    if np.any(degrees <= 0):
        bad = int(np.flatnonzero(degrees <= 0)[0])
        raise LinAlgError(f"node {bad} has zero degree; increase k or b")
    return HeatKernelGraph(W, degrees, float(b))


def _nontrivial(images, sqrt_d, r):
    """Indices of the first ``r`` columns of ``images`` not aligned with ``D^1/2 1``."""
    ref = sqrt_d / np.linalg.norm(sqrt_d)
    norms = np.linalg.norm(images, axis=0)
    cos = np.abs(ref @ images) / np.where(norms > 0, norms, 1.0)
    keep = np.flatnonzero(cos < TRIVIAL_COSINE)
    if r is not None:
        keep = keep[:r]
    return keep, np.flatnonzero(cos >= TRIVIAL_COSINE)


def _whitened_pencil(Xt, Wn, basis=None):
    """Eigenpairs of ``(X~^T W~ X~, X~^T X~)`` restricted to ``range(basis)``.

    Returns ``(mu, E, images)`` with ``images = X~ E`` orthonormal.
    """
    A = Xt if basis is None else Xt @ basis
    svd = dense_svd(A)
    keep = svd.S > 1e-10 * svd.S[0] if svd.S.size and svd.S[0] > 0 else np.zeros(0, bool)
    if not np.any(keep):
        raise LinAlgError("weighted data matrix is numerically zero")
    P = svd.U[:, keep]
    M = P.T @ (Wn @ P)
    mu, F = symmetric_eig(0.5 * (M + M.T))
    E = (svd.V[:, keep] / svd.S[keep]) @ F
    if basis is not None:
        E = basis @ E
    return mu, E, P @ F


def fit_lpp(X, k=10, b=None, r=2, mode="exact", t=None, delta=DEFAULT_OVERSAMPLING,
            use_rp=False, squared=False, rng=None) -> EdrModel:
    """Locality preserving projections onto ``r`` directions.

    Exact mode solves the whitened pencil on the full range of
    ``X~ = D^1/2 X``. Randomized mode first finds an ``(r + 1 + delta)``
    dimensional dominant invariant subspace of ``X^T W X`` by a
    normalized power method (``t`` iterations, applied through the sparse
    graph) and solves the pencil restricted to it.
    """
    rng = as_stream(rng)
    Xc, means = center_columns(X)
    n, p = Xc.shape
    graph = heat_kernel_graph(Xc, k, b, use_rp, rng.child("knn"), squared)
    sqrt_d = np.sqrt(graph.degrees)
    Xt = Xc * sqrt_d[:, None]
    Wn = graph.normalized()
    t_star = 0
    if mode == "exact":
        mu, E, images = _whitened_pencil(Xt, Wn)
    elif mode == "randomized":
        t_star = DEFAULT_POWER_ITERS if t is None else int(t)
        if t_star < 1:
            raise ValueError("t must be >= 1")
        width = min(r + 1 + delta, min(n, p))

        def apply(Q):
            return Xc.T @ (graph.W @ (Xc @ Q))

        Q = gaussian_matrix(p, width, rng.child("factor"))
        for _ in range(t_star):
            Q = qr_orthonormalize(apply(Q), check_rank=False)
        mu, E, images = _whitened_pencil(Xt, Wn, Q)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    keep, trivial = _nontrivial(images, sqrt_d, r)
    if keep.size < r:
        raise LinAlgError(f"only {keep.size} non-trivial directions available, r={r}")
    G = E[:, keep]
    G = G / np.linalg.norm(G, axis=0)
    name = "lpp" if mode == "exact" else "rand.lpp"
    return EdrModel(G, name, means, d_star=int(r), t_star=t_star, eigenvalues=mu[keep],
                    info={"bandwidth": graph.bandwidth, "trivial_excluded": int(trivial.size)})
