"""Data-driven choice of rank and power-iteration count.

The rank ``d`` for a fixed power count ``t`` is the change point of the
per-direction stability scores (mean absolute Spearman correlation of
eigenvector estimates across independent random projections), located by
the split with the smallest Wilcoxon rank-sum p-value. The power count is
the minimizer of the Bi-Cross-Validation (BiCV) error over a 2 x 2 Gabriel
holdout, where each held-out block ``A`` of ``[[A, B], [C, D]]`` is
predicted by ``B D^+ C``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from randsdr.linalg import as_matrix, as_stream, dense_svd, gaussian_matrix, qr_orthonormalize
from randsdr.rsvd import DEFAULT_OVERSAMPLING, clipped_delta, randomized_svd_fixed
from randsdr.stats import DegenerateStatisticWarning, midranks, wilcoxon_rank_sum_pvalue

__all__ = [
    "StabilityProfile",
    "BicvReport",
    "stability_scores",
    "stability_profiles",
    "change_point_pvalues",
    "change_point_rank",
    "gabriel_partition",
    "schur_holdout_error",
    "bicv_error",
    "bicv_curve",
    "argmin_t",
    "select_t_d",
]

DEFAULT_NUM_PROJECTIONS = 5


@dataclass(frozen=True)
class StabilityProfile:
    t: int
    num_projections: int
    scores: np.ndarray
    pvalues: np.ndarray
    d_hat: int


@dataclass(frozen=True)
class BicvReport:
    t: int
    block_errors: tuple
    bicv_error: float
    d_hat: int
    block_ranks: tuple
    partition_seed: int


def _power_eigenbases(X, t_max, width, rng):
    """Left singular vectors of ``(X X^T)^t Omega`` for ``t = 1..t_max``.

    The block is carried as ``Q M`` with ``Q`` orthonormal and ``M`` the
    accumulated (rescaled) triangular factors of the half-step QRs, so
    the ``S^(2t)`` weighting survives without overflowing.
    """
    Q, M = qr_orthonormalize(gaussian_matrix(X.shape[0], width, rng), check_rank=False, return_r=True)
    out = []
    for _ in range(t_max):
        Q1, R1 = qr_orthonormalize(X.T @ Q, check_rank=False, return_r=True)
        Q, R2 = qr_orthonormalize(X @ Q1, check_rank=False, return_r=True)
        M = R2 @ (R1 @ M)
        top = np.max(np.abs(M))
        if top > 0:
            M = M / top
        out.append(Q @ dense_svd(M).U)
    return out


def _rank_columns_standardized(U):
    R = midranks(U)
    R = R - R.mean(axis=0)
    norms = np.linalg.norm(R, axis=0)
    out = np.zeros_like(R)
    ok = norms > 0
    out[:, ok] = R[:, ok] / norms[ok]
    return out, ok


def change_point_pvalues(scores, alternative="greater") -> np.ndarray:
    """Wilcoxon p-values for every split ``{1..k-1}`` vs ``{k..d_max}``, k = 2..d_max-1."""
    scores = np.asarray(scores, dtype=float)
    d_max = scores.size
    if d_max < 4:
        raise ValueError("change point needs d_max >= 4")
    return np.array([
        wilcoxon_rank_sum_pvalue(scores[: k - 1], scores[k - 1:], alternative)
        for k in range(2, d_max)
    ])


def stability_scores(X, t, d_max, num_projections=DEFAULT_NUM_PROJECTIONS, rng=None,
                     alternative="greater") -> StabilityProfile:
    """Stability score of each of the top ``d_max`` eigen-directions at power ``t``.

    Each of ``B = num_projections`` independent Gaussian projections
    ``Omega_b`` (n x d_max) yields an eigenbasis of the power block
    ``(X X^T)^t Omega_b``; the score of direction ``k`` is the mean over
    the ``B (B - 1) / 2`` pairs of the absolute Spearman correlation
    between the matched ``k``-th eigenvectors.
    """
    return stability_profiles(X, t, d_max, num_projections, rng, alternative)[-1]


def stability_profiles(X, t_max, d_max, num_projections=DEFAULT_NUM_PROJECTIONS, rng=None,
                       alternative="greater"):
    """:func:`stability_scores` for every ``t = 1..t_max`` from one power sweep.

    Entry ``t - 1`` equals ``stability_scores(X, t, ...)`` with the same stream.
    """
    X = as_matrix(X, "X")
    rng = as_stream(rng)
    if num_projections < 2:
        raise ValueError("need at least 2 projections")
    if d_max < 1 or d_max > min(X.shape):
        raise ValueError(f"d_max={d_max} must be in 1..{min(X.shape)}")
    if t_max < 1:
        raise ValueError("t must be >= 1")
    # bases[b][t-1]
    bases = [_power_eigenbases(X, t_max, d_max, rng.child("projection", b))
             for b in range(num_projections)]
    return [_profile([bases[b][t - 1] for b in range(num_projections)], t, alternative)
            for t in range(1, t_max + 1)]


def _profile(bases, t, alternative):
    num_projections = len(bases)
    d_max = bases[0].shape[1]
    standardized = [_rank_columns_standardized(U) for U in bases]
    total = np.zeros(d_max)
    pairs = 0
    for i in range(num_projections - 1):
        Zi, oki = standardized[i]
        for j in range(i + 1, num_projections):
            Zj, okj = standardized[j]
            # zero rank variance contributes correlation 0
            total += np.abs(np.clip(np.sum(Zi * Zj, axis=0), -1.0, 1.0)) * (oki & okj)
            pairs += 1
    scores = total / pairs
    if d_max >= 4:
        pvalues = change_point_pvalues(scores, alternative)
        d_hat = _argmin_rank(pvalues)
    else:
        pvalues = np.zeros(0)
        d_hat = d_max
    return StabilityProfile(int(t), num_projections, scores, pvalues, d_hat)


def _argmin_rank(pvalues):
    k_index = int(np.argmin(pvalues))  # first occurrence on ties
    if pvalues[k_index] >= 1.0:
        warnings.warn("stability scores show no change point (all p-values are 1)",
                      DegenerateStatisticWarning, stacklevel=3)
    # split k = k_index + 2 keeps directions 1..k-1
    return k_index + 1


def change_point_rank(profile, alternative="greater") -> int:
    """Rank kept before the most significant stability change point.

    Accepts a :class:`StabilityProfile` or a raw score vector. The result
    lies in ``1..d_max - 2``: the split at ``k`` keeps ``k - 1`` directions.
    """
    if isinstance(profile, StabilityProfile):
        pvalues = profile.pvalues
        if pvalues.size == 0:
            return profile.d_hat
    else:
        pvalues = change_point_pvalues(profile, alternative)
    return _argmin_rank(pvalues)


# ---------------------------------------------------------------------------
# Bi-Cross-Validation


def gabriel_partition(n, p, rng):
    """Random split of row and column indices into two groups each.

    Groups are as even as possible (``ceil(n/2)``, ``floor(n/2)``) and
    the indices inside each group are sorted.
    """
    if n < 4 or p < 4:
        raise ValueError(f"BiCV needs n, p >= 4, got ({n}, {p})")
    gen = as_stream(rng).generator()
    rperm = gen.permutation(n)
    cperm = gen.permutation(p)
    rcut = math.ceil(n / 2)
    ccut = math.ceil(p / 2)
    rows = (np.sort(rperm[:rcut]), np.sort(rperm[rcut:]))
    cols = (np.sort(cperm[:ccut]), np.sort(cperm[ccut:]))
    for g in rows + cols:
        if g.size == 0:
            raise ValueError("degenerate Gabriel partition")
    return rows, cols


def _truncated_pinv_apply(svd, B, C):
    """``B D^+ C`` from a truncated SVD of ``D``, dropping negligible singular values."""
    S = svd.S
    if S.size == 0 or S[0] == 0.0:
        return np.zeros((B.shape[0], C.shape[1]))
    rel_tol = 1e-12 * max(svd.U.shape[0], svd.V.shape[0])
    keep = S > rel_tol * S[0]
    left = (B @ svd.V[:, keep]) / S[keep]
    return left @ (svd.U[:, keep].T @ C)


def schur_holdout_error(A, B, C, D, t, d, delta=DEFAULT_OVERSAMPLING, rng=None) -> float:
    """``||A - B D^+ C||_F^2`` with ``D^+`` from a rank-``d`` randomized SVD of ``D``."""
    d = int(min(d, min(D.shape)))
    svd = randomized_svd_fixed(D, d, clipped_delta(d, delta, D.shape), t, rng)
    R = A - _truncated_pinv_apply(svd, B, C)
    return float(np.sum(R * R))


def _median4(values):
    v = np.sort(np.asarray(values, dtype=float))
    return 0.5 * (v[1] + v[2])


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def _holdout_blocks(X, partition):
    rows, cols = partition
    for i in (0, 1):
        for j in (0, 1):
            r_out, r_in = rows[i], rows[1 - i]
            c_out, c_in = cols[j], cols[1 - j]
            yield (i, j), (X[np.ix_(r_out, c_out)], X[np.ix_(r_out, c_in)],
                           X[np.ix_(r_in, c_out)], X[np.ix_(r_in, c_in)])


def _block_ranks(D, t_max, d_max, num_projections, rng, rank):
    """Rank ``d(t)`` on a training block for ``t = 1..t_max``."""
    m = min(D.shape)
    if rank is not None:
        return [min(int(rank), m)] * t_max
    dm = min(d_max, m)
    if dm < 4:
        return [dm] * t_max
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateStatisticWarning)
        profiles = stability_profiles(D, t_max, dm, num_projections, rng)
    return [pr.d_hat for pr in profiles]


def _sweep(X, t_values, d_max, delta, rng, num_projections, partition, rank):
    errors = {t: [] for t in t_values}
    ranks = {t: [] for t in t_values}
    for (i, j), (A, B, C, D) in _holdout_blocks(X, partition):
        block_rng = rng.child("block", i, j)
        d_of_t = _block_ranks(D, max(t_values), d_max, num_projections,
                              block_rng.child("stability"), rank)
        for t in t_values:
            d = d_of_t[t - 1]
            ranks[t].append(d)
            errors[t].append(schur_holdout_error(A, B, C, D, t, d, delta, block_rng.child("factor")))
    return [
        BicvReport(
            t=int(t),
            block_errors=tuple(errors[t]),
            bicv_error=_median4(errors[t]),
            d_hat=max(1, _round_half_up(_median4(ranks[t]))),
            block_ranks=tuple(ranks[t]),
            partition_seed=rng.stream,
        )
        for t in t_values
    ]


def bicv_error(X, t, d_max, delta=DEFAULT_OVERSAMPLING, rng=None, num_projections=DEFAULT_NUM_PROJECTIONS,
               partition=None, rank=None) -> BicvReport:
    """BiCV error at power ``t`` over the four blocks of a 2 x 2 Gabriel holdout.

    For each held-out block the rank ``d(t)`` is estimated on the training
    block ``D`` by the stability change point (``d_max`` clipped to
    ``D``'s smaller dimension) unless ``rank`` pins it. The reported error
    and rank are medians over the four blocks.

    Random streams are keyed by block, not by ``t``, so a sweep over ``t``
    compares power counts under common random numbers.
    """
    X = as_matrix(X, "X")
    rng = as_stream(rng)
    if t < 1:
        raise ValueError("t must be >= 1")
    if partition is None:
        partition = gabriel_partition(*X.shape, rng.child("partition"))
    return _sweep(X, [int(t)], d_max, delta, rng, num_projections, partition, rank)[0]


def bicv_curve(X, t_max, d_max, delta=DEFAULT_OVERSAMPLING, rng=None,
               num_projections=DEFAULT_NUM_PROJECTIONS, rank=None):
    """``bicv_error`` for ``t = 1..t_max`` on one shared Gabriel partition.

    Entry ``t - 1`` equals ``bicv_error(X, t, ...)`` with the same stream
    and partition; the stability power sweeps are shared across ``t``.
    """
    X = as_matrix(X, "X")
    rng = as_stream(rng)
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    partition = gabriel_partition(*X.shape, rng.child("partition"))
    return _sweep(X, list(range(1, t_max + 1)), d_max, delta, rng, num_projections, partition, rank)


def argmin_t(reports, rule="one_se", rel_tol=1e-9):
    """``(t*, d*)`` from a BiCV curve; near-ties go to the smallest ``t``.

    ``rule="exact"`` takes the plain minimizer (ties within ``rel_tol``).
    ``rule="one_se"`` takes the smallest ``t`` whose error is within one
    standard error of the minimum, the standard error being the spread
    of the four block errors at the minimizer divided by 2. Differences
    below that are not resolvable from one holdout and larger ``t``
    inflates the rank estimate.
    """
    errs = np.array([r.bicv_error for r in reports])
    best = int(np.argmin(errs))
    slack = rel_tol * max(abs(errs[best]), 1e-300)
    if rule == "one_se":
        slack = max(slack, float(np.std(reports[best].block_errors, ddof=1)) / 2.0)
    elif rule != "exact":
        raise ValueError(f"unknown rule {rule!r}")
    idx = int(np.flatnonzero(errs <= errs[best] + slack)[0])
    return reports[idx].t, reports[idx].d_hat


def select_t_d(X, t_max, d_max, delta=DEFAULT_OVERSAMPLING, rng=None,
               num_projections=DEFAULT_NUM_PROJECTIONS, rule="one_se"):
    """Select ``(t*, d*)``: BiCV-optimal power count and the BiCV rank at it."""
    reports = bicv_curve(X, t_max, d_max, delta, rng, num_projections)
    return argmin_t(reports, rule)
