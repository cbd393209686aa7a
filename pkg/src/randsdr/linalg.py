"""Dense linear-algebra kernels and seeded randomness.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. The SVD
(Golub-Kahan) and symmetric eigensolver (Jacobi) are written out so
their failure modes are explicit; they are meant for the *small*
projected problems inside the randomized algorithms. QR uses LAPACK's
Householder routines because it runs inside every power iteration. The
large data matrix is only ever touched through products and QR.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from randsdr import _kernels

__all__ = [
    "RngStream",
    "as_stream",
    "TruncatedSVD",
    "LinAlgError",
    "RankDeficiencyError",
    "ConvergenceError",
    "as_matrix",
    "gaussian_matrix",
    "qr_orthonormalize",
    "dense_svd",
    "pseudoinverse",
    "symmetric_eig",
    "orthonormal_basis",
    "principal_angles",
    "SMALL_PROBLEM_BOUND",
]

SMALL_PROBLEM_BOUND = 2000


class LinAlgError(ArithmeticError):
    """Base class for numerical failures in this package."""


class RankDeficiencyError(LinAlgError):
    def __init__(self, column, norm):
        self.column = column
        self.norm = norm
        super().__init__(
            f"matrix is rank deficient: column {column} collapsed to norm {norm:.3e}"
        )


class ConvergenceError(LinAlgError):
    def __init__(self, message, **diagnostics):
        self.diagnostics = diagnostics
        detail = ", ".join(f"{k}={v}" for k, v in diagnostics.items())
        super().__init__(f"{message} ({detail})" if detail else message)


# ---------------------------------------------------------------------------
# randomness


def _label_to_int(parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little") >> 1


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, stream)``.

    Every call to :meth:`generator` returns a *fresh* generator positioned
    at the start of the stream, so consumers never share state. Use
    :meth:`child` to derive independent sub-streams by label; labels are
    hashed, so adding a new consumer does not perturb existing ones.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *labels) -> "RngStream":
        return RngStream(self.seed, _label_to_int((self.stream,) + labels))


def as_stream(rng) -> RngStream:
    """Coerce ``None``, an int seed or an :class:`RngStream` to a stream."""
    if isinstance(rng, RngStream):
        return rng
    if rng is None:
        return RngStream(0)
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    raise TypeError(f"expected RngStream or int seed, got {type(rng).__name__}")


# ---------------------------------------------------------------------------
# containers


@dataclass(frozen=True)
class TruncatedSVD:
    """Rank-``d`` factorization ``X ~ U diag(S) V^T``.

    ``rank_est`` and ``power_iters`` record the selected ``d*`` and ``t*``
    (``power_iters`` is 0 for exact factorizations). ``info`` carries
    optional selection diagnostics.
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    rank_est: int
    power_iters: int = 0
    info: dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @property
    def rank(self) -> int:
        return int(self.S.shape[0])

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.S) @ self.V.T

    def truncate(self, d: int) -> "TruncatedSVD":
        return TruncatedSVD(self.U[:, :d], self.S[:d], self.V[:, :d],
                            rank_est=d, power_iters=self.power_iters, info=self.info)


def as_matrix(A, name="matrix") -> np.ndarray:
    """Validate ``A`` as a finite, non-empty 2-D float64 array."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {A.shape}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return A


def _fix_signs(U, *others):
    """Make the largest-magnitude entry of each column of ``U`` positive."""
    if U.shape[1] == 0:
        return (U,) + others
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return (U * signs,) + tuple(M * signs for M in others)


# ---------------------------------------------------------------------------
# kernels


def gaussian_matrix(rows: int, cols: int, rng) -> np.ndarray:
    """iid N(0, 1) matrix drawn from the start of ``rng``'s stream."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    return as_stream(rng).generator().standard_normal((rows, cols))


def qr_orthonormalize(A, check_rank=True, tol=1e-13, return_r=False):
    """Orthonormal basis for the columns of ``A`` by Householder QR.

    Parameters
    ----------
    A : (m, k) array with k <= m
    check_rank : bool
        If true, raise :class:`RankDeficiencyError` when a pivot
        ``|R[j, j]|`` falls below ``tol`` times the largest column norm of
        ``A``. If false, the returned columns are still orthonormal and
        their span contains ``range(A)``; directions for collapsed columns
        are completed arbitrarily. Power iterations rely on this.
    return_r : bool
        Also return the triangular factor, so that ``A = Q R``.
    """
    A = as_matrix(A, "A")
    m, k = A.shape
    if k > m:
        raise ValueError(f"need cols <= rows, got {A.shape}")
    # LAPACK geqrf/orgqr: the same Householder reflections, blocked
    Q, R = np.linalg.qr(A, mode="reduced")
    diag = np.diag(R)
    if check_rank:
        scale = np.max(np.linalg.norm(A, axis=0))
        small = np.flatnonzero(np.abs(diag) <= tol * scale) if scale > 0 else np.array([0])
        if small.size:
            j = int(small[0])
            raise RankDeficiencyError(j, abs(diag[j]) / scale if scale else 0.0)
    # R_jj >= 0 convention so Q does not depend on reflector sign choices
    d = np.sign(diag)
    d[d == 0] = 1.0
    Q = Q * d
    if return_r:
        return Q, R * d[:, None]
    return Q


def dense_svd(A, max_iter=None) -> TruncatedSVD:
    """Full (thin) SVD of a small dense matrix via Golub-Kahan-Reinsch.

    Singular values come back sorted nonincreasing; each left singular
    vector has its largest-magnitude entry positive.
    """
    A = as_matrix(A, "A")
    m, n = A.shape
    if min(m, n) > SMALL_PROBLEM_BOUND:
        raise ValueError(
            f"dense_svd is for small problems (min dim <= {SMALL_PROBLEM_BOUND}), got {A.shape}"
        )
    transposed = m < n
    work = np.array(A.T if transposed else A, dtype=np.float64, order="C", copy=True)
    mm, nn = work.shape
    # unit scale; entries whose squares would underflow are flushed
    amax = float(np.max(np.abs(work))) if work.size else 0.0
    if amax > 0.0:
        work /= amax
        work[np.abs(work) < 1e-150] = 0.0
    # tall input: factor R of a QR first, the kernel's column sweeps are slow on long columns
    Q = None
    if mm > 2 * nn:
        Q, work = qr_orthonormalize(work, check_rank=False, return_r=True)
        work = np.ascontiguousarray(work)
        mm = nn
    w = np.zeros(nn)
    v = np.zeros((nn, nn))
    cap = 100 * nn if max_iter is None else max_iter
    its, failed = _kernels.golub_kahan_svd(work, w, v, cap)
    if failed >= 0:
        raise ConvergenceError(
            "Golub-Kahan SVD did not converge", iterations=its, index=int(failed),
            shape=A.shape,
        )
    order = np.argsort(-w, kind="stable")
    S = w[order] * amax
    U = work[:, order]
    if Q is not None:
        U = Q @ U
    V = v[:, order]
    if transposed:
        U, V = V, U
    U, V = _fix_signs(U, V)
    return TruncatedSVD(U, S, V, rank_est=int(np.sum(S > 0)), power_iters=0)


def pseudoinverse(A, rel_tol=None) -> np.ndarray:
    """Moore-Penrose pseudoinverse ``V S^+ U^T``.

    Singular values at or below ``rel_tol * max(S)`` are treated as zero;
    the default ``rel_tol`` is ``1e-12 * max(m, n)``.
    """
    A = as_matrix(A, "A")
    if rel_tol is None:
        rel_tol = 1e-12 * max(A.shape)
    svd = dense_svd(A)
    if svd.S.size == 0 or svd.S[0] == 0.0:
        return np.zeros(A.shape[::-1])
    keep = svd.S > rel_tol * svd.S[0]
    return (svd.V[:, keep] / svd.S[keep]) @ svd.U[:, keep].T


def symmetric_eig(A, sym_tol=1e-10, max_sweeps=100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues sorted
    nonincreasing and each eigenvector's largest-magnitude entry positive.
    Raises ``ValueError`` if ``A`` is not symmetric to ``sym_tol``
    (relative to its largest entry).
    """
    A = as_matrix(A, "A")
    n, m = A.shape
    if n != m:
        raise ValueError(f"symmetric_eig needs a square matrix, got {A.shape}")
    if n > SMALL_PROBLEM_BOUND:
        raise ValueError(f"symmetric_eig is for small problems, got n={n}")
    amax = np.max(np.abs(A))
    asym = np.max(np.abs(A - A.T))
    if asym > sym_tol * max(amax, np.finfo(float).tiny):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    work = np.array(0.5 * (A + A.T), order="C")
    d = np.zeros(n)
    V = np.zeros((n, n))
    sweeps = _kernels.jacobi_eig(work, d, V, max_sweeps)
    if sweeps < 0:
        raise ConvergenceError("Jacobi eigensolver did not converge", sweeps=max_sweeps, n=n)
    order = np.argsort(-d, kind="stable")
    evals = d[order]
    (V,) = _fix_signs(V[:, order])
    return evals, V


# ---------------------------------------------------------------------------
# subspace utilities


def orthonormal_basis(A, rel_tol=1e-10) -> np.ndarray:
    """Orthonormal basis of ``range(A)`` (numerical rank via SVD)."""
    svd = dense_svd(A)
    if svd.S.size == 0 or svd.S[0] == 0.0:
        return np.zeros((A.shape[0], 0))
    return svd.U[:, svd.S > rel_tol * svd.S[0]]


def principal_angles(A, B) -> np.ndarray:
    """Principal angles (radians, ascending) between ``range(A)`` and ``range(B)``.

    Uses cosines for large angles and sines for small ones so that angles
    down to ~1e-15 are resolved accurately.
    """
    QA = orthonormal_basis(np.atleast_2d(np.asarray(A, float).T).T)
    QB = orthonormal_basis(np.atleast_2d(np.asarray(B, float).T).T)
    if QA.shape[1] < QB.shape[1]:
        QA, QB = QB, QA
    k = QB.shape[1]
    if k == 0:
        return np.zeros(0)
    M = QA.T @ QB
    cos = np.clip(dense_svd(M).S[:k], 0.0, 1.0)
    resid = QB - QA @ M
    sin = np.clip(dense_svd(resid).S[:k], 0.0, 1.0)[::-1]
    angles = np.where(cos**2 < 0.5, np.arccos(cos), np.arcsin(sin))
    return np.sort(angles)
