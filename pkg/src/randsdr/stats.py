"""Rank statistics used by the stability-based rank estimator."""
from __future__ import annotations

import functools
import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DegenerateStatisticWarning",
    "RankVector",
    "midranks",
    "spearman_correlation",
    "wilcoxon_rank_sum_pvalue",
    "EXACT_MAX_POOLED",
]

# exact enumeration up to this pooled size when ranks are tied
EXACT_MAX_POOLED = 12
# tie-free samples use the exact rank-sum distribution up to this size
EXACT_MAX_UNTIED = 120


class DegenerateStatisticWarning(RuntimeWarning):
    """A statistic was undefined (zero variance) and a fallback value was used."""


@dataclass(frozen=True)
class RankVector:
    values: np.ndarray
    ranks: np.ndarray

    @classmethod
    def of(cls, values):
        values = np.asarray(values, dtype=float)
        return cls(values, midranks(values))


def midranks(x) -> np.ndarray:
    """1-based ranks of ``x`` along the first axis, ties given their average rank.

    Works column-wise for 2-D input.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        return np.column_stack([midranks(col) for col in x.T]) if x.shape[1] else x.copy()
    n = x.shape[0]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ranks = np.empty(n)
    # boundaries of runs of equal values
    edges = np.flatnonzero(np.diff(xs) != 0) + 1
    starts = np.concatenate(([0], edges))
    stops = np.concatenate((edges, [n]))
    avg = 0.5 * (starts + stops - 1) + 1.0
    ranks[order] = np.repeat(avg, stops - starts)
    return ranks


def _pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    if den == 0.0:
        return None
    return float(np.clip((a @ b) / den, -1.0, 1.0))


def spearman_correlation(u, v) -> float:
    """Spearman rank correlation: Pearson correlation of the mid-ranks.

    A constant input has no rank variance; the correlation is then defined
    as 0 and a :class:`DegenerateStatisticWarning` is issued.
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise ValueError("u and v must have the same length")
    if u.size < 3:
        raise ValueError("spearman_correlation needs at least 3 observations")
    rho = _pearson(midranks(u), midranks(v))
    if rho is None:
        warnings.warn("constant input to spearman_correlation; returning 0",
                      DegenerateStatisticWarning, stacklevel=2)
        return 0.0
    return rho


def _exact_pvalue(ranks, n1, w_obs, alternative):
    n = ranks.size
    mean = n1 * (n + 1) / 2.0
    eps = 1e-9
    count = 0
    total = 0
    for combo in itertools.combinations(range(n), n1):
        w = float(ranks[list(combo)].sum())
        total += 1
        if alternative == "greater":
            hit = w >= w_obs - eps
        elif alternative == "less":
            hit = w <= w_obs + eps
        else:
            hit = abs(w - mean) >= abs(w_obs - mean) - eps
        count += hit
    return count / total


@functools.lru_cache(maxsize=16)
def _rank_sum_table(n):
    """Null counts of the Mann-Whitney U for every split ``n1 + n2 = n``.

    Entry ``n1`` holds the counts of U = 0..n1*n2 over all C(n, n1)
    assignments, from the recurrence
    f(i, j, u) = f(i-1, j, u-j) + f(i, j-1, u).
    """
    f = {(0, j): np.ones(1) for j in range(n + 1)}
    for i in range(1, n + 1):
        f[(i, 0)] = np.ones(1)
        for j in range(1, n - i + 1):
            a = f[(i - 1, j)]
            b = f[(i, j - 1)]
            out = np.zeros(i * j + 1)
            out[j:j + a.size] += a
            out[:b.size] += b
            f[(i, j)] = out
    return tuple(f[(i, n - i)] for i in range(n + 1))


def _untied_exact_pvalue(n1, n2, w_obs, alternative):
    counts = _rank_sum_table(n1 + n2)[n1]
    total = counts.sum()
    u_obs = int(round(w_obs - n1 * (n1 + 1) / 2.0))
    upper = counts[u_obs:].sum() / total
    lower = counts[: u_obs + 1].sum() / total
    if alternative == "greater":
        return float(upper)
    if alternative == "less":
        return float(lower)
    return float(min(1.0, 2.0 * min(upper, lower)))


def _normal_pvalue(ranks, n1, n2, w_obs, alternative):
    n = n1 + n2
    mean = n1 * (n + 1) / 2.0
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts)) / (n * (n - 1))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 0.0:
        return 1.0
    sd = math.sqrt(var)
    diff = w_obs - mean
    if alternative == "greater":
        z = (diff - 0.5) / sd
        return 0.5 * math.erfc(z / math.sqrt(2.0))
    if alternative == "less":
        z = (diff + 0.5) / sd
        return 0.5 * math.erfc(-z / math.sqrt(2.0))
    z = max(abs(diff) - 0.5, 0.0) / sd
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def wilcoxon_rank_sum_pvalue(a, b, alternative="greater") -> float:
    """p-value of the Wilcoxon rank-sum test of ``a`` against ``b``.

    ``alternative`` is ``"greater"`` (``a`` tends to be larger), ``"less"``
    or ``"two-sided"``. For pooled size up to 12 the null distribution is
    enumerated exactly over all assignments of the pooled mid-ranks. Larger
    samples without ties (pooled size up to 120) use the exact
    distribution of the rank-sum statistic computed by recursion; the
    remaining cases use a normal approximation with tie-corrected variance
    and continuity correction. If every pooled value is identical the
    p-value is 1.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    n1, n2 = a.size, b.size
    if n1 < 1 or n2 < 1 or n1 + n2 < 4:
        raise ValueError("need |a|, |b| >= 1 and |a| + |b| >= 4")
    if alternative not in ("greater", "less", "two-sided"):
        raise ValueError(f"unknown alternative {alternative!r}")
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        return 1.0
    ranks = midranks(pooled)
    w_obs = float(ranks[:n1].sum())
    if n1 + n2 <= EXACT_MAX_POOLED:
        return _exact_pvalue(ranks, n1, w_obs, alternative)
    if n1 + n2 <= EXACT_MAX_UNTIED and np.unique(pooled).size == pooled.size:
        return _untied_exact_pvalue(n1, n2, w_obs, alternative)
    return _normal_pvalue(ranks, n1, n2, w_obs, alternative)
