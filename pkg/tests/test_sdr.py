import warnings

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from randsdr.linalg import LinAlgError, principal_angles
from randsdr.sdr import (
    build_gamma_lsir,
    build_gamma_sir,
    center_columns,
    factor_gamma,
    fit_lsir,
    fit_pca,
    fit_sir,
    generalized_edr,
    is_categorical,
    slice_response,
    transform,
)
from randsdr.simgen import aedr


def single_index(gen, n=400, p=8):
    X = gen.standard_normal((n, p))
    b = np.zeros(p)
    b[:2] = [1.0, -1.0]
    y = (X @ b) ** 3 + 0.1 * gen.standard_normal(n)
    return X, y, b


def test_slice_sizes_and_order():
    y = np.arange(23.0)
    s = slice_response(y, 5)
    assert s.sizes.tolist() == [5, 5, 5, 4, 4]
    # largest responses land in slice 0
    assert sorted(s.members(0).tolist()) == [18, 19, 20, 21, 22]
    assert s.members(4).tolist() == [0, 1, 2, 3]


def test_slice_ties_by_index():
    s = slice_response(np.array([1.0, 1.0, 1.0, 1.0]), 2)
    assert s.slice_of.tolist() == [0, 0, 1, 1]


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=60), st.integers(1, 12))
def test_slices_partition_samples(ys, H):
    H = min(H, len(ys))
    s = slice_response(np.array(ys), H)
    assert s.sizes.sum() == len(ys)
    assert s.sizes.max() - s.sizes.min() <= 1
    assert np.array_equal(np.bincount(s.slice_of, minlength=H), s.sizes)


def test_categorical_response_overrides_h():
    y = np.array([2, 0, 2, 1, 0])
    assert is_categorical(y) and not is_categorical(y.astype(float))
    with pytest.warns(UserWarning):
        s = slice_response(y, 10)
    assert s.H == 3 and s.slice_of.tolist() == [2, 0, 2, 1, 0]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert slice_response(y, None).H == 3


def test_slice_input_checks():
    with pytest.raises(ValueError):
        slice_response(np.array([1.0, np.nan]), 1)
    with pytest.raises(ValueError):
        slice_response(np.arange(3.0), 4)


def test_gamma_sir_oracle(gen):
    X = gen.standard_normal((12, 3))
    s = slice_response(np.arange(12.0), 3)
    L = build_gamma_sir(X, s).L
    for h in range(3):
        assert np.allclose(L[:, h], X[s.members(h)].sum(axis=0))


def test_gamma_lsir_oracle(gen):
    X = gen.standard_normal((10, 2))
    s = slice_response(np.arange(10.0), 2)
    L = build_gamma_lsir(X, s, 1).L
    for h in range(2):
        idx = s.members(h)
        Xh = X[idx]
        D = np.linalg.norm(Xh[:, None] - Xh[None], axis=2)
        np.fill_diagonal(D, np.inf)
        nn = np.argmin(D, axis=1)
        for a, i in enumerate(idx):
            nb = {a, nn[a]} | {b for b in range(len(idx)) if nn[b] == a}
            assert np.allclose(L[:, i], Xh[sorted(nb)].mean(axis=0))


def test_lsir_full_neighborhood_reduces_to_sir(gen):
    # with every slice member a neighbor and equal slice sizes, Gamma_LSIR is proportional to Gamma_SIR
    X, y, _ = single_index(gen, n=60, p=5)
    Xc, _ = center_columns(X)
    s = slice_response(y, 3)
    Gs = build_gamma_sir(Xc, s).L
    Gl = build_gamma_lsir(Xc, s, 19).L
    A, B = Gs @ Gs.T, Gl @ Gl.T
    assert np.allclose(A / np.linalg.norm(A), B / np.linalg.norm(B), atol=1e-12)


def test_lsir_small_slice_error(gen):
    X = gen.standard_normal((10, 2))
    with pytest.raises(ValueError, match="slice 0"):
        build_gamma_lsir(X, slice_response(np.arange(10.0), 5), 2)


def test_generalized_edr_matches_scipy_pencil(gen):
    for _ in range(5):
        X = gen.standard_normal((50, 6))
        L = gen.standard_normal((6, 3))
        U, S, _ = np.linalg.svd(L, full_matrices=False)
        G, lam = generalized_edr(U, S, X)
        w, V = scipy.linalg.eigh(L @ L.T, X.T @ X)
        w, V = w[::-1][:3], V[:, ::-1][:, :3]
        assert np.allclose(lam, w, rtol=1e-9)
        for j in range(3):
            v = V[:, j] / np.linalg.norm(V[:, j])
            assert abs(abs(v @ G[:, j]) - 1) < 1e-9
        M = X.T @ X
        assert np.linalg.norm(L @ L.T @ G - M @ G * lam) < 1e-8 * np.linalg.norm(M @ G * lam)


def test_restricted_solver_is_exact_for_invariant_range(gen):
    # range(U) spanned by eigenvectors of X^T X
    X = gen.standard_normal((60, 6))
    _, _, Vt = np.linalg.svd(X, full_matrices=False)
    U = Vt.T[:, :3]
    S = np.array([3.0, 2.0, 1.0])
    a, la = generalized_edr(U, S, X, solver="restricted")
    b, lb = generalized_edr(U, S, X, solver="pencil")
    assert principal_angles(a, b).max() < 1e-8
    assert np.allclose(np.sort(la), np.sort(lb), rtol=1e-9)


def test_restricted_solver_differs_in_general(gen):
    X = gen.standard_normal((50, 6)) @ np.diag([1.0, 2, 3, 4, 5, 6])
    U, S, _ = np.linalg.svd(gen.standard_normal((6, 2)), full_matrices=False)
    a, _ = generalized_edr(U, S, X, solver="restricted")
    b, _ = generalized_edr(U, S, X, solver="pencil")
    assert principal_angles(a, b).max() > 1e-3


def test_wide_data_uses_restricted_solver(gen):
    X = gen.standard_normal((10, 30))
    U, S, _ = np.linalg.svd(X.T @ gen.standard_normal((10, 3)), full_matrices=False)
    a, _ = generalized_edr(U, S, X)
    b, _ = generalized_edr(U, S, X, solver="restricted")
    assert np.array_equal(a, b)


def test_generalized_edr_checks(gen):
    X = gen.standard_normal((10, 3))
    U = np.eye(3)[:, :2]
    with pytest.raises(LinAlgError):
        generalized_edr(U, np.array([1.0, 0.0]), X)
    with pytest.raises(ValueError):
        generalized_edr(U, np.array([1.0, 0.5]), X, r=3)
    with pytest.raises(ValueError):
        generalized_edr(U, np.array([1.0, 0.5]), X, solver="qz")


def test_sir_recovers_single_index(gen):
    X, y, b = single_index(gen)
    m = fit_sir(X, y, H=10, r=1)
    assert m.method == "sir" and m.G.shape == (8, 1)
    assert aedr(b, m.G) > 0.95
    assert np.cos(principal_angles(b[:, None], m.G)[0]) > 0.95


def test_lsir_recovers_single_index(gen):
    X, y, b = single_index(gen)
    m = fit_lsir(X, y, H=5, k=10, r=1)
    assert m.method == "lsir" and m.d_star == 8
    assert np.cos(principal_angles(b[:, None], m.G)[0]) > 0.9


def test_randomized_sir_pinned_matches_exact(gen):
    X, y, _ = single_index(gen)
    a = fit_sir(X, y, r=1)
    b = fit_sir(X, y, r=1, mode="randomized", d=8, t=2, rng=3)
    assert b.method == "rand.sir" and b.t_star == 2
    assert principal_angles(a.G, b.G)[0] < 1e-6


def test_randomized_lsir_selects(gen):
    X, y, b = single_index(gen, n=300, p=6)
    m = fit_lsir(X, y, H=5, k=10, r=1, mode="randomized", t_max=3, rng=1)
    assert m.method == "rand.lsir" and 1 <= m.t_star <= 3
    assert np.cos(principal_angles(b[:, None], m.G)[0]) > 0.8


def test_sir_column_scaling_equivariance(gen):
    X, y, _ = single_index(gen)
    D = np.diag(gen.uniform(0.5, 3.0, X.shape[1]))
    a = fit_sir(X, y, r=2).G
    b = fit_sir(X @ D, y, r=2).G
    assert principal_angles(np.linalg.solve(D, a), b).max() < 1e-8


def test_factor_gamma_modes(gen):
    L = gen.standard_normal((20, 4)) @ gen.standard_normal((4, 30))
    from randsdr.sdr import GammaFactor
    U, S, t = factor_gamma(GammaFactor(L))
    assert U.shape == (20, 4) and t == 0
    U2, S2, t2 = factor_gamma(GammaFactor(L), "randomized", d=4, t=1, rng=2)
    assert np.allclose(S2, S, rtol=1e-10) and t2 == 1
    with pytest.raises(ValueError):
        factor_gamma(GammaFactor(L), "fast")
    with pytest.raises(LinAlgError):
        factor_gamma(GammaFactor(np.zeros((3, 3))))


def test_pca(gen):
    X = gen.standard_normal((100, 5)) * np.array([5.0, 3.0, 1.0, 0.5, 0.1])
    m = fit_pca(X, r=2)
    assert m.method == "pca"
    assert principal_angles(m.G, np.eye(5)[:, :2]).max() < 0.2
    mr = fit_pca(X, r=2, mode="randomized", delta=3, t=3, rng=0)
    assert mr.method == "rand.pca" and principal_angles(m.G, mr.G).max() < 1e-6
    with pytest.raises(ValueError):
        fit_pca(X)


def test_transform_centering(gen):
    X, y, _ = single_index(gen, n=100, p=4)
    m = fit_sir(X, y, H=5, r=2)
    Z = transform(m, X + 7.0)
    assert np.allclose(Z, transform(m, X))
    assert np.allclose(transform(m, X, center="train"), (X - m.means) @ m.G)
    with pytest.raises(ValueError):
        transform(m, X[:, :3])
    with pytest.raises(ValueError):
        transform(m, X, center="none")


def test_fit_input_checks(gen):
    X = gen.standard_normal((20, 3))
    with pytest.raises(ValueError):
        fit_sir(X, np.arange(19.0))
