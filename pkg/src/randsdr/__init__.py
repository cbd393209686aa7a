"""Randomized low-rank factorization and dimension reduction.

Adaptive randomized SVD with data-driven rank and power-iteration count,
and randomized versions of PCA, sliced inverse regression (SIR),
localized SIR and locality preserving projections.
"""
from randsdr.linalg import (
    ConvergenceError,
    LinAlgError,
    RankDeficiencyError,
    RngStream,
    TruncatedSVD,
    dense_svd,
    principal_angles,
)
from randsdr.rsvd import adaptive_randomized_svd, randomized_svd_fixed
from randsdr.sdr import EdrModel, fit_lsir, fit_pca, fit_sir, transform
from randsdr.lpp import fit_lpp
from randsdr.simgen import SimDataset, gen_latent_factor, gen_lowrank_noise, gen_xor

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "LinAlgError",
    "RankDeficiencyError",
    "RngStream",
    "TruncatedSVD",
    "dense_svd",
    "principal_angles",
    "adaptive_randomized_svd",
    "randomized_svd_fixed",
    "EdrModel",
    "fit_sir",
    "fit_lsir",
    "fit_pca",
    "fit_lpp",
    "transform",
    "SimDataset",
    "gen_lowrank_noise",
    "gen_xor",
    "gen_latent_factor",
]
