"""Sliced inverse regression (SIR), localized SIR (LSIR) and PCA.

Both supervised methods solve ``Gamma g = lambda Sigma g`` with
``Gamma = L L^T`` of low rank. Writing ``Gamma = U S^2 U^T`` the problem
reduces to the small symmetric one

    S^-1 U^T Sigma U S^-1 e = (1 / lambda) e,    g = U S^-1 e,

so with ``W = X U S^-1`` the wanted directions come from the right
singular vectors of ``W`` with the *smallest* singular values.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from randsdr import knn
from randsdr.linalg import LinAlgError, as_matrix, as_stream, dense_svd
from randsdr.rsvd import DEFAULT_OVERSAMPLING, DEFAULT_T_MAX, adaptive_randomized_svd, clipped_delta

__all__ = [
    "EdrModel",
    "SliceAssignment",
    "GammaFactor",
    "center_columns",
    "is_categorical",
    "slice_response",
    "build_gamma_sir",
    "build_gamma_lsir",
    "factor_gamma",
    "generalized_edr",
    "fit_sir",
    "fit_lsir",
    "fit_pca",
    "transform",
]

DEFAULT_SLICES = 10
# singular values of W below this fraction of the largest are null directions
W_GUARD = 1e-10


@dataclass(frozen=True)
class SliceAssignment:
    H: int
    slice_of: np.ndarray
    sizes: np.ndarray

    def members(self, h) -> np.ndarray:
        return np.flatnonzero(self.slice_of == h)


@dataclass(frozen=True)
class GammaFactor:
    """``Gamma = L L^T``; ``L`` is ``p x H`` for SIR and ``p x n`` for LSIR."""

    L: np.ndarray

    @property
    def m(self) -> int:
        return self.L.shape[1]


@dataclass(frozen=True)
class EdrModel:
    """A fitted reduction ``z = G^T (x - means)``."""

    G: np.ndarray
    method: str
    means: np.ndarray
    d_star: int
    t_star: int = 0
    y_mean: float | None = None
    eigenvalues: np.ndarray | None = None
    info: dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @property
    def r(self) -> int:
        return self.G.shape[1]


def center_columns(X):
    X = as_matrix(X, "X")
    means = X.mean(axis=0)
    return X - means, means


def is_categorical(y) -> bool:
    """Integer, boolean and string responses are class labels."""
    return np.asarray(y).dtype.kind in "biuUSO"


def slice_response(y, H=DEFAULT_SLICES) -> SliceAssignment:
    """Group samples into slices of similar response.

    A quantitative ``y`` is sorted in decreasing order (ties by original
    index) and cut into ``H`` contiguous slices of size ``n // H``, the
    first ``n % H`` slices taking one extra sample. A categorical ``y``
    gets one slice per class, in sorted class order.
    """
    y = np.asarray(y)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("y must be a non-empty vector")
    n = y.size
    if is_categorical(y):
        classes, codes = np.unique(y, return_inverse=True)
        if H is not None and H != classes.size:
            warnings.warn(f"categorical response has {classes.size} classes; using H={classes.size}",
                          UserWarning, stacklevel=2)
        return SliceAssignment(classes.size, codes.astype(np.intp), np.bincount(codes))
    y = y.astype(float)
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains NaN or Inf")
    if not 1 <= H <= n:
        raise ValueError(f"H must be in 1..n = {n}, got {H}")
    order = np.argsort(-y, kind="stable")
    sizes = np.full(H, n // H)
    sizes[: n % H] += 1
    slice_of = np.empty(n, dtype=np.intp)
    slice_of[order] = np.repeat(np.arange(H), sizes)
    return SliceAssignment(H, slice_of, sizes)


def build_gamma_sir(X, slices: SliceAssignment) -> GammaFactor:
    """Column ``h`` of ``L`` is the sum of the rows of ``X`` in slice ``h``."""
    X = as_matrix(X, "X")
    L = np.zeros((X.shape[1], slices.H))
    np.add.at(L.T, slices.slice_of, X)
    return GammaFactor(L)


def build_gamma_lsir(X, slices: SliceAssignment, k, use_rp=False, rng=None) -> GammaFactor:
    """Column ``i`` of ``L`` is the mean of ``x_i``'s neighbors within its slice.

    Neighborhoods are the symmetrized kNN graph of each slice (self
    included), so the weight of each neighbor is ``1 / k_h(i)``.
    """
    X = as_matrix(X, "X")
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = as_stream(rng)
    L = np.zeros((X.shape[1], X.shape[0]))
    for h in range(slices.H):
        idx = slices.members(h)
        if idx.size < k + 1:
            raise ValueError(f"slice {h} has {idx.size} samples, need at least k + 1 = {k + 1}")
        Xh = X[idx]
        graph = knn.rp_knn(Xh, k, rng.child("slice", h)) if use_rp else knn.exact_knn(Xh, k)
        graph = knn.symmetrize(graph)
        for local, nb in enumerate(graph.neighbors):
            L[:, idx[local]] = Xh[nb].mean(axis=0)
    return GammaFactor(L)


def _numerical_rank(S, shape):
    if S.size == 0 or S[0] == 0.0:
        return 0
    tol = max(shape) * np.finfo(float).eps * S[0]
    return int(np.sum(S > tol))


def factor_gamma(gamma: GammaFactor, mode="exact", d=None, t=None, d_max=None,
                 t_max=DEFAULT_T_MAX, delta=DEFAULT_OVERSAMPLING, rng=None):
    """``(U, S, t*)`` with ``Gamma ~ U S^2 U^T`` of rank ``d*``.

    Exact mode takes the numerical rank of ``L`` (or ``d`` if given).
    Randomized mode runs the adaptive randomized SVD on ``L``; the
    oversampling is clipped when ``L`` is too narrow for it.
    """
    L = gamma.L
    if mode == "exact":
        svd = dense_svd(L)
        rank = _numerical_rank(svd.S, L.shape)
        if d is not None:
            rank = min(int(d), rank)
        if rank < 1:
            raise LinAlgError("Gamma is numerically zero")
        return svd.U[:, :rank], svd.S[:rank], 0
    if mode != "randomized":
        raise ValueError(f"unknown mode {mode!r}")
    m = min(L.shape)
    if d is not None:
        dl = clipped_delta(int(d), delta, L.shape)
        res = adaptive_randomized_svd(L, t_max=t_max, delta=dl, rng=rng, d=int(d), t=t)
    else:
        if d_max is None:
            d_max = m - delta if m - delta >= 4 else m
        dl = clipped_delta(d_max, delta, L.shape)
        res = adaptive_randomized_svd(L, t_max=t_max, d_max=d_max, delta=dl, rng=rng, t=t)
    keep = _numerical_rank(res.S, L.shape)
    if keep < 1:
        raise LinAlgError("Gamma is numerically zero")
    return res.U[:, :keep], res.S[:keep], res.power_iters


def generalized_edr(U, S, X, r=None, solver="auto"):
    """Top ``r`` generalized eigenvectors of ``(U S^2 U^T, X^T X)``.

    ``solver="pencil"`` solves ``Gamma g = lambda Sigma g`` exactly through
    the SVD ``X = P D V^T``: with ``Z = D^-1 V^T U S = A diag(z) E^T`` the
    eigenvalues are ``z^2`` and ``g ~ V D^-1 a``. ``solver="restricted"``
    restricts ``g`` to ``range(U)``, i.e. ``g = U S^-1 e`` with ``e`` a
    right singular vector of ``W = X U S^-1``; the smallest singular
    values of ``W`` give the largest ``lambda = 1 / sigma^2``. The two
    agree only when ``range(U)`` is invariant under ``Sigma``. ``"auto"``
    uses the pencil when ``X`` has numerically full column rank and the
    restricted form otherwise (``p > n``), where the pencil is singular.

    Returns ``(G, lambdas)`` with unit-norm columns ordered by decreasing
    generalized eigenvalue. ``r`` defaults to every usable direction.
    """
    X = as_matrix(X, "X")
    if np.any(S <= 0):
        raise LinAlgError("Gamma factor has a zero singular value within the retained rank")
    xs = None
    if solver == "auto":
        solver = "restricted"
        if X.shape[0] > X.shape[1]:
            xs = dense_svd(X)
            if xs.S[0] > 0 and xs.S[-1] > W_GUARD * xs.S[0]:
                solver = "pencil"
    if solver == "pencil":
        G, lam = _pencil_edr(U, S, X, xs)
    elif solver == "restricted":
        G, lam = _restricted_edr(U, S, X)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    if r is None:
        r = G.shape[1]
    if not 1 <= r <= G.shape[1]:
        raise ValueError(f"r must be in 1..{G.shape[1]}, got {r}")
    G = G[:, :r]
    return G / np.linalg.norm(G, axis=0), lam[:r]


def _pencil_edr(U, S, X, xs=None):
    xs = dense_svd(X) if xs is None else xs
    keep = xs.S > W_GUARD * xs.S[0] if xs.S[0] > 0 else np.zeros(xs.S.size, bool)
    if not np.any(keep):
        raise LinAlgError("X is numerically zero")
    V, D = xs.V[:, keep], xs.S[keep]
    zs = dense_svd((V.T @ (U * S)) / D[:, None])
    usable = zs.S > W_GUARD * zs.S[0] if zs.S[0] > 0 else np.zeros(zs.S.size, bool)
    if not np.any(usable):
        raise LinAlgError("X is numerically zero on the range of Gamma")
    return (V / D) @ zs.U[:, usable], zs.S[usable] ** 2


def _restricted_edr(U, S, X):
    US = U / S
    svd = dense_svd(X @ US)
    sv = svd.S
    usable = np.flatnonzero(sv > W_GUARD * sv[0]) if sv.size and sv[0] > 0 else np.array([], int)
    if usable.size == 0:
        raise LinAlgError("X is numerically zero on the range of Gamma")
    # smallest singular values of W first = largest lambda
    usable = usable[::-1]
    return US @ svd.V[:, usable], 1.0 / sv[usable] ** 2


def _prepare(X, y, H):
    X = as_matrix(X, "X")
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise ValueError(f"y must be a vector of length n = {X.shape[0]}")
    Xc, means = center_columns(X)
    slices = slice_response(y, H)
    y_mean = None if is_categorical(y) else float(np.mean(y.astype(float)))
    return Xc, means, slices, y_mean


def _fit(method, Xc, means, y_mean, gamma, r, mode, d, t, d_max, t_max, delta, rng, solver):
    U, S, t_star = factor_gamma(gamma, mode, d=d, t=t, d_max=d_max, t_max=t_max,
                                delta=delta, rng=rng.child("factor"))
    if r is not None:
        r = min(int(r), U.shape[1])
    G, lam = generalized_edr(U, S, Xc, r, solver)
    name = method if mode == "exact" else f"rand.{method}"
    return EdrModel(G, name, means, d_star=U.shape[1], t_star=int(t_star), y_mean=y_mean,
                    eigenvalues=lam)


def fit_sir(X, y, H=DEFAULT_SLICES, r=None, mode="exact", d=None, t=None, d_max=None,
            t_max=DEFAULT_T_MAX, delta=DEFAULT_OVERSAMPLING, rng=None, solver="auto") -> EdrModel:
    """Sliced inverse regression.

    ``r`` defaults to the rank ``d*`` of the inverse-regression
    covariance. In randomized mode ``d*`` and ``t*`` are selected from the
    data unless ``d`` and ``t`` pin them. ``solver`` is passed to
    :func:`generalized_edr`.
    """
    Xc, means, slices, y_mean = _prepare(X, y, H)
    gamma = build_gamma_sir(Xc, slices)
    return _fit("sir", Xc, means, y_mean, gamma, r, mode, d, t, d_max, t_max, delta, as_stream(rng),
                solver)


def fit_lsir(X, y, H=DEFAULT_SLICES, k=10, r=None, mode="exact", use_rp=None, d=None, t=None,
             d_max=None, t_max=DEFAULT_T_MAX, delta=DEFAULT_OVERSAMPLING, rng=None,
             solver="auto") -> EdrModel:
    """Localized sliced inverse regression with ``k`` within-slice neighbors.

    ``use_rp`` switches the neighbor search to a random projection; by
    default it is on in randomized mode.
    """
    rng = as_stream(rng)
    Xc, means, slices, y_mean = _prepare(X, y, H)
    if use_rp is None:
        use_rp = mode == "randomized"
    gamma = build_gamma_lsir(Xc, slices, k, use_rp, rng.child("knn"))
    return _fit("lsir", Xc, means, y_mean, gamma, r, mode, d, t, d_max, t_max, delta, rng, solver)


def fit_pca(X, r=None, mode="exact", t=None, d_max=None, t_max=DEFAULT_T_MAX,
            delta=DEFAULT_OVERSAMPLING, rng=None, y=None) -> EdrModel:
    """Principal components: ``G`` holds the top right singular vectors of centered ``X``.

    Exact mode needs ``r``. Randomized mode selects the rank when ``r`` is
    omitted. ``y`` is only used to record its mean for regression.
    """
    Xc, means = center_columns(X)
    y_mean = None if y is None or is_categorical(y) else float(np.mean(np.asarray(y, float)))
    rng = as_stream(rng)
    if mode == "exact":
        if r is None:
            raise ValueError("exact PCA needs r")
        svd = dense_svd(Xc)
        r = min(int(r), svd.S.size)
        return EdrModel(svd.V[:, :r], "pca", means, d_star=r, y_mean=y_mean,
                        eigenvalues=svd.S[:r] ** 2)
    if mode != "randomized":
        raise ValueError(f"unknown mode {mode!r}")
    m = min(Xc.shape)
    if r is not None:
        res = adaptive_randomized_svd(Xc, t_max=t_max, delta=clipped_delta(int(r), delta, Xc.shape),
                                      rng=rng.child("factor"), d=int(r), t=t)
    else:
        if d_max is None:
            d_max = m - delta if m - delta >= 4 else m
        res = adaptive_randomized_svd(Xc, t_max=t_max, d_max=d_max,
                                      delta=clipped_delta(d_max, delta, Xc.shape),
                                      rng=rng.child("factor"), t=t)
    return EdrModel(res.V, "rand.pca", means, d_star=res.rank_est, t_star=res.power_iters,
                    y_mean=y_mean, eigenvalues=res.S ** 2, info=res.info)


def transform(model: EdrModel, X_new, center="self") -> np.ndarray:
    """Project ``X_new`` onto the reduction: ``(X_new - m) G``.

    ``center="self"`` centers by ``X_new``'s own column means, so test
    data is centered independently of the training data;
    ``center="train"`` uses the training means.
    """
    X_new = as_matrix(X_new, "X_new")
    if X_new.shape[1] != model.G.shape[0]:
        raise ValueError(f"X_new has {X_new.shape[1]} columns, model expects {model.G.shape[0]}")
    if center == "self":
        m = X_new.mean(axis=0)
    elif center == "train":
        m = model.means
    else:
        raise ValueError(f"unknown centering {center!r}")
    return (X_new - m) @ model.G
