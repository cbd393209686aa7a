"""Randomized range finding and the adaptive randomized SVD."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from randsdr.linalg import (
    TruncatedSVD,
    _fix_signs,
    as_matrix,
    as_stream,
    dense_svd,
    gaussian_matrix,
    qr_orthonormalize,
)

__all__ = [
    "DEFAULT_OVERSAMPLING",
    "DEFAULT_T_MAX",
    "PowerBlockSequence",
    "power_blocks",
    "range_basis",
    "project_and_factor",
    "randomized_svd_fixed",
    "adaptive_randomized_svd",
]

DEFAULT_OVERSAMPLING = 10
DEFAULT_T_MAX = 10


@dataclass(frozen=True)
class PowerBlockSequence:
    """Blocks ``F^(t) = (X X^T)^t Omega`` for ``t = 1..t_max``.

    With ``normalized=True`` every stored block is the orthonormalized
    version, which spans the same subspace in exact arithmetic.
    """

    blocks: tuple
    ell: int
    oversampling: int | None
    normalized: bool

    def __len__(self):
        return len(self.blocks)

    def __getitem__(self, t):
        """Block for power ``t`` (1-based, like the math)."""
        if not 1 <= t <= len(self.blocks):
            raise IndexError(f"t must be in 1..{len(self.blocks)}")
        return self.blocks[t - 1]


def _orth(A):
    return qr_orthonormalize(A, check_rank=False)


def power_blocks(X, ell, t_max, rng, normalized=True, oversampling=None, omega=None):
    """Power blocks of ``X X^T`` applied to a Gaussian test matrix.

    In the normalized variant each multiplication by ``X^T`` and by ``X``
    is followed by re-orthonormalization, which keeps the dynamic range of
    ``S^(2t)`` from overflowing the working precision.
    """
    X = as_matrix(X, "X")
    n, p = X.shape
    if ell < 1 or ell > min(n, p):
        raise ValueError(f"ell={ell} must be in 1..min(n, p)={min(n, p)}")
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    F = gaussian_matrix(n, ell, rng) if omega is None else np.asarray(omega, float)
    blocks = []
    for _ in range(t_max):
        if normalized:
            F = _orth(X @ _orth(X.T @ F))
        else:
            F = X @ (X.T @ F)
        blocks.append(F)
    return PowerBlockSequence(tuple(blocks), ell, oversampling, normalized)


def range_basis(X, ell, t, rng) -> np.ndarray:
    """Orthonormal ``n x ell`` basis ``Q`` of the normalized block ``F^(t)``."""
    X = as_matrix(X, "X")
    n, p = X.shape
    Q = gaussian_matrix(n, ell, rng)
    for _ in range(t):
        Q = _orth(X @ _orth(X.T @ Q))
    return Q


def project_and_factor(X, Q, d) -> TruncatedSVD:
    """Rank-``d`` SVD of ``X`` restricted to ``range(Q)``.

    With ``B = X^T Q = U_B diag(sigma) W^T`` we have
    ``Q Q^T X = (Q W) diag(sigma) U_B^T``.
    """
    B = X.T @ Q
    svd = dense_svd(B)
    U = Q @ svd.V[:, :d]
    V = svd.U[:, :d]
    U, V = _fix_signs(U, V)
    return TruncatedSVD(U, svd.S[:d].copy(), V, rank_est=d)


def randomized_svd_fixed(X, d, delta=DEFAULT_OVERSAMPLING, t=1, rng=None) -> TruncatedSVD:
    """Rank-``d`` randomized SVD with ``t`` normalized power iterations.

    The working width is ``ell = d + delta``. When ``n > p`` the algorithm
    runs on ``X^T`` so the random block lives in the smaller dimension.
    """
    X = as_matrix(X, "X")
    n, p = X.shape
    if d < 1 or delta < 0:
        raise ValueError("need d >= 1 and delta >= 0")
    if d + delta > min(n, p):
        raise ValueError(f"d + delta = {d + delta} exceeds min(n, p) = {min(n, p)}")
    if t < 1:
        raise ValueError("t must be >= 1")
    rng = as_stream(rng)
    if n > p:
        res = randomized_svd_fixed(X.T, d, delta, t, rng)
        U, V = _fix_signs(res.V, res.U)
        return TruncatedSVD(U, res.S, V, rank_est=d, power_iters=t)
    Q = range_basis(X, d + delta, t, rng)
    res = project_and_factor(X, Q, d)
    return TruncatedSVD(res.U, res.S, res.V, rank_est=d, power_iters=t)


def clipped_delta(d, delta, shape):
    """Largest oversampling <= ``delta`` that fits ``d + delta <= min(shape)``."""
    return max(0, min(delta, min(shape) - d))


def adaptive_randomized_svd(X, t_max=DEFAULT_T_MAX, d_max=None, delta=DEFAULT_OVERSAMPLING,
                            rng=None, d=None, t=None, num_projections=5,
                            t_rule="one_se") -> TruncatedSVD:
    """Randomized SVD with data-driven rank ``d*`` and power count ``t*``.

    Parameters
    ----------
    X : (n, p) array
    t_max : int
        Largest power count considered by Bi-Cross-Validation.
    d_max : int, optional
        Upper bound on the rank; defaults to ``min(n, p) - delta``.
    delta : int
        Oversampling.
    rng : RngStream or int
    d, t : int, optional
        Pin the rank and/or power count. If both are pinned this is
        :func:`randomized_svd_fixed`. If only ``t`` is pinned the rank is
        the stability change point at that ``t``; otherwise ``t*`` (and
        ``d*`` unless pinned) come from the BiCV sweep.
    num_projections : int
        ``B``, the number of random projections in the stability score.
    t_rule : {"one_se", "exact"}
        How the BiCV curve is minimized, see :func:`randsdr.select.argmin_t`.

    Returns
    -------
    TruncatedSVD
        ``rank_est = d*``, ``power_iters = t*``; ``info`` holds the BiCV
        curve and stability scores when they were computed.
    """
    from randsdr import select  # circular at import time

    X = as_matrix(X, "X")
    rng = as_stream(rng)
    n, p = X.shape
    if d_max is None:
        d_max = min(n, p) - delta if d is None else d
    if d is None and d_max + delta > min(n, p):
        raise ValueError(f"d_max + delta = {d_max + delta} exceeds min(n, p) = {min(n, p)}")
    info = {}
    if d is not None and t is not None:
        d_star, t_star = d, t
    elif t is not None:
        profile = select.stability_scores(X, t, d_max, num_projections, rng.child("stability"))
        d_star, t_star = select.change_point_rank(profile), t
        info["stability_scores"] = profile.scores.tolist()
        info["stability_pvalues"] = profile.pvalues.tolist()
    else:
        reports = select.bicv_curve(X, t_max, d_max, delta, rng.child("bicv"),
                                    num_projections=num_projections, rank=d)
        t_star, d_hat = select.argmin_t(reports, t_rule)
        d_star = d if d is not None else d_hat
        info["bicv_curve"] = [r.bicv_error for r in reports]
        info["bicv_ranks"] = [r.d_hat for r in reports]
    d_star = int(min(d_star, min(n, p)))
    res = randomized_svd_fixed(X, d_star, clipped_delta(d_star, delta, X.shape), t_star,
                               rng.child("factorize"))
    return TruncatedSVD(res.U, res.S, res.V, rank_est=d_star, power_iters=int(t_star), info=info)
