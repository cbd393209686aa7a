"""Synthetic data sets and evaluation metrics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from randsdr.linalg import as_stream, principal_angles, qr_orthonormalize

__all__ = [
    "SimDataset",
    "gen_lowrank_noise",
    "gen_xor",
    "gen_latent_factor",
    "latent_factor_sample",
    "aedr",
    "mspe_r2",
    "singular_value_error",
    "reconstruction_error",
    "accuracy",
]


@dataclass(frozen=True)
class SimDataset:
    X: np.ndarray
    y: np.ndarray | None
    truth: dict[str, Any]
    seed: int
    stream: int = 0
    extra: dict[str, Any] = field(default_factory=dict, compare=False, repr=False)


def _orthonormal_columns(rows, cols, gen):
    # Gaussian columns are uniform on the sphere; QR makes them orthonormal
    return qr_orthonormalize(gen.standard_normal((rows, cols)))


def gen_lowrank_noise(n, p, d_star, kappa, rng=None, noise_var=None) -> SimDataset:
    """``X = U S V^T + E`` with iid Gaussian noise ``E``.

    The singular values start at ``nu_0 = kappa * s1(E')``, the top
    singular value of an independent noise draw, and grow by Exp(1)
    increments; they are stored in decreasing order. ``noise_var``
    defaults to ``1 / n``.
    """
    if not 1 <= d_star <= min(n, p):
        raise ValueError(f"d_star must be in 1..{min(n, p)}")
    stream = as_stream(rng)
    gen = stream.generator()
    sd = np.sqrt(1.0 / n if noise_var is None else float(noise_var))
    U = _orthonormal_columns(n, d_star, gen)
    V = _orthonormal_columns(p, d_star, gen)
    E = sd * gen.standard_normal((n, p))
    s1 = float(np.linalg.norm(sd * gen.standard_normal((n, p)), 2))
    nu = gen.exponential(1.0, d_star)
    S = (kappa * s1 + np.cumsum(nu))[::-1].copy()
    X = (U * S) @ V.T + E
    truth = {"U": U, "S": S, "V": V, "d_star": int(d_star), "kappa": float(kappa),
             "nu0": float(kappa * s1), "noise_sd": float(sd)}
    return SimDataset(X, None, truth, stream.seed, stream.stream)


def gen_xor(n, p, d_star=10, sigma=1.0, pi=0.5, rng=None) -> SimDataset:
    """Generalized XOR: ``d_star`` signal coordinates at ``+-2`` plus noise.

    Every coordinate gets ``N(0, sigma^2)`` noise; signal coordinates
    are ``-2`` with probability ``pi`` and ``+2`` otherwise. The label is
    the parity of the number of negative signal coordinates, so
    ``d_star = 2`` is the usual four-cluster XOR.
    """
    if not 1 <= d_star <= p:
        raise ValueError(f"d_star must be in 1..p = {p}")
    if sigma < 0 or not 0 <= pi <= 1:
        raise ValueError("need sigma >= 0 and 0 <= pi <= 1")
    stream = as_stream(rng)
    gen = stream.generator()
    centers = np.where(gen.random((n, d_star)) < pi, -2.0, 2.0)
    X = sigma * gen.standard_normal((n, p))
    X[:, :d_star] += centers
    y = (np.sum(centers < 0, axis=1) % 2).astype(np.int64)
    basis = np.eye(p)[:, :d_star]
    truth = {"d_star": int(d_star), "sigma": float(sigma), "pi": float(pi), "basis": basis}
    return SimDataset(X, y, truth, stream.seed, stream.stream)


def gen_latent_factor(n, p, d_star=None, s2n_range=(0.3, 0.6), rng=None) -> SimDataset:
    """Latent factor regression ``X_i = B S lambda_i + nu_i``, ``y_i = lambda_i^T theta + eps_i``.

    ``d_star`` defaults to a uniform draw from 5..20. ``theta`` and ``s``
    are t(5) draws ordered by decreasing magnitude; the noise variances
    ``psi^2`` and ``tau^2`` are set so the signal-to-noise ratios equal
    targets drawn uniformly from ``s2n_range``. The truth holds
    ``b_true``, the population direction ``Cov(X)^-1 Cov(X, y)``.
    """
    stream = as_stream(rng)
    gen = stream.generator()
    if d_star is None:
        d_star = int(gen.integers(5, 21))
    if not 1 <= d_star <= p:
        raise ValueError(f"d_star must be in 1..p = {p}")
    lo, hi = s2n_range
    if not 0 < lo <= hi < 1:
        raise ValueError("s2n_range must satisfy 0 < lo <= hi < 1")
    B = _orthonormal_columns(p, d_star, gen)
    s = gen.standard_t(5, d_star)
    s = s[np.argsort(-np.abs(s), kind="stable")]
    theta = gen.standard_t(5, d_star)
    theta = theta[np.argsort(-np.abs(theta), kind="stable")]
    s2n_x, s2n_y = gen.uniform(lo, hi, 2)
    smin2 = float(np.min(s ** 2))
    psi2 = smin2 * (1.0 - s2n_x) / s2n_x
    tt = float(theta @ theta)
    tau2 = tt * (1.0 - s2n_y) / s2n_y
    # (B S^2 B^T + psi^2 I)^-1 B S theta, by Woodbury
    b_true = B @ (s / (s ** 2 + psi2) * theta)
    truth = {"B": B, "s": s, "theta": theta, "psi2": psi2, "tau2": tau2,
             "s2n_x": float(s2n_x), "s2n_y": float(s2n_y), "b_true": b_true, "d_star": d_star}
    X, y = latent_factor_sample(truth, n, gen)
    return SimDataset(X, y, truth, stream.seed, stream.stream)


def latent_factor_sample(truth, n, rng):
    """Fresh ``(X, y)`` from the latent factor model in ``truth``."""
    gen = rng if isinstance(rng, np.random.Generator) else as_stream(rng).generator()
    B, s, theta = truth["B"], truth["s"], truth["theta"]
    p, d = B.shape
    lam = gen.standard_normal((n, d))
    eps = np.sqrt(truth["tau2"]) * gen.standard_normal(n)
    nu = np.sqrt(truth["psi2"]) * gen.standard_normal((n, p))
    X = (lam * s) @ B.T + nu
    y = lam @ theta + eps
    return X, y


# ---------------------------------------------------------------------------
# metrics


def aedr(b_true, G) -> float:
    """Absolute correlation between the true direction and the estimate.

    For a single direction this is ``|corr(b, g)|`` over coordinates; for
    several it is the cosine of the smallest principal angle between
    ``b`` and ``span(G)``.
    """
    b = np.asarray(b_true, float).ravel()
    G = np.asarray(G, float)
    if G.ndim == 1 or G.shape[1] == 1:
        g = G.ravel()
        bc, gc = b - b.mean(), g - g.mean()
        den = np.linalg.norm(bc) * np.linalg.norm(gc)
        return float(abs(bc @ gc) / den) if den > 0 else 0.0
    return float(np.cos(principal_angles(b[:, None], G)[0]))


def mspe_r2(Z_train, y_train, Z_test, y_test):
    """Least-squares fit of ``y`` on the projections, scored on test data.

    Returns ``(mspe, r2)``: the mean squared prediction error and the
    squared correlation between ``y_test`` and its prediction.
    """
    Z_train = np.atleast_2d(np.asarray(Z_train, float).T).T
    Z_test = np.atleast_2d(np.asarray(Z_test, float).T).T
    y_train = np.asarray(y_train, float)
    y_test = np.asarray(y_test, float)
    ym = y_train.mean()
    coef, *_ = np.linalg.lstsq(Z_train, y_train - ym, rcond=None)
    pred = Z_test @ coef + ym
    mspe = float(np.mean((y_test - pred) ** 2))
    if np.std(pred) == 0 or np.std(y_test) == 0:
        return mspe, 0.0
    return mspe, float(np.corrcoef(y_test, pred)[0, 1] ** 2)


def singular_value_error(S_est, S_ref) -> float:
    """Mean relative error ``|s_hat - s| / s`` over the top entries, in percent."""
    S_est = np.asarray(S_est, float)
    S_ref = np.asarray(S_ref, float)[: S_est.size]
    return float(100.0 * np.mean(np.abs(S_est - S_ref) / S_ref))


def reconstruction_error(X, svd) -> float:
    """``||X - U S V^T||_F / ||X||_F``."""
    X = np.asarray(X, float)
    return float(np.linalg.norm(X - svd.reconstruct()) / np.linalg.norm(X))


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError("label vectors differ in shape")
    return float(np.mean(y_true == y_pred))
