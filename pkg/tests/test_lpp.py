import numpy as np
import pytest
import scipy.linalg

from randsdr.linalg import LinAlgError, principal_angles
from randsdr.lpp import fit_lpp, heat_kernel_graph


def dense_lpp(X, k, r):
    Xc = X - X.mean(axis=0)
    g = heat_kernel_graph(Xc, k)
    W = g.W.toarray()
    D = np.diag(W.sum(axis=1))
    w, V = scipy.linalg.eigh(Xc.T @ W @ Xc, Xc.T @ D @ Xc)
    return V[:, ::-1][:, :r], w[::-1][:r]


def test_graph_weights(gen):
    X = gen.standard_normal((30, 3))
    g = heat_kernel_graph(X, 4)
    W = g.W.toarray()
    assert np.allclose(W, W.T)
    assert np.all(np.diag(W) == 0)
    assert np.all(W <= 1) and np.all(W >= 0)
    assert np.allclose(g.degrees, W.sum(axis=1))
    i, j = np.nonzero(W)
    d = np.linalg.norm(X[i] - X[j], axis=1)
    assert np.allclose(W[i, j], np.exp(-d / g.bandwidth))
    assert g.bandwidth == pytest.approx(np.median(d))


def test_graph_explicit_and_squared_bandwidth(gen):
    X = gen.standard_normal((20, 2))
    g = heat_kernel_graph(X, 3, b=2.0, squared=True)
    i, j = np.nonzero(g.W.toarray())
    assert np.allclose(g.W.toarray()[i, j], np.exp(-np.sum((X[i] - X[j]) ** 2, axis=1) / 2.0))
    with pytest.raises(ValueError):
        heat_kernel_graph(X, 3, b=-1.0)


def test_graph_zero_degree(gen):
    X = 100.0 * gen.standard_normal((10, 2))
    with pytest.raises(LinAlgError, match="zero degree"):
        heat_kernel_graph(X, 2, b=1e-300)


def test_normalized_graph_spectrum(gen):
    g = heat_kernel_graph(gen.standard_normal((25, 3)), 5)
    ev = np.linalg.eigvalsh(g.normalized().toarray())
    assert ev.max() == pytest.approx(1.0, abs=1e-10)
    assert ev.min() >= -1 - 1e-10


def test_exact_lpp_matches_dense_pencil(gen):
    for _ in range(5):
        X = gen.standard_normal((40, 6)) * np.array([4.0, 3, 2, 1, 1, 1])
        m = fit_lpp(X, k=6, r=2)
        V, mu = dense_lpp(X, 6, 2)
        assert m.method == "lpp" and m.G.shape == (6, 2)
        assert np.allclose(m.eigenvalues, mu, rtol=1e-9)
        for j in range(2):
            assert principal_angles(m.G[:, [j]], V[:, [j]])[0] < 1e-6


def test_randomized_lpp_full_width_is_exact(gen):
    X = gen.standard_normal((50, 8))
    a = fit_lpp(X, k=5, r=2)
    b = fit_lpp(X, k=5, r=2, mode="randomized", delta=10, rng=1)
    assert b.method == "rand.lpp" and b.t_star == 2
    assert principal_angles(a.G, b.G).max() < 1e-8


def test_randomized_lpp_approximates_on_wide_data(gen):
    n, p = 80, 300
    Z = gen.standard_normal((n, 2)) * 10
    X = Z @ gen.standard_normal((2, p)) / np.sqrt(p) + 0.1 * gen.standard_normal((n, p))
    m = fit_lpp(X, k=8, r=2, mode="randomized", t=4, delta=5, rng=2)
    assert m.G.shape == (p, 2)
    assert np.all(m.eigenvalues <= 1 + 1e-9)


def test_lpp_mode_checks(gen):
    X = gen.standard_normal((20, 3))
    with pytest.raises(ValueError):
        fit_lpp(X, mode="fast")
    with pytest.raises(ValueError):
        fit_lpp(X, mode="randomized", t=0)


def test_lpp_embedding_keeps_clusters_apart(gen):
    centers = np.array([[5.0, 0, 0, 0], [-5.0, 0, 0, 0]])
    labels = np.repeat([0, 1], 30)
    X = centers[labels] + gen.standard_normal((60, 4))
    m = fit_lpp(X, k=5, r=1)
    z = ((X - m.means) @ m.G).ravel()
    assert min(z[labels == 0].max(), z[labels == 1].max()) < max(z[labels == 0].min(), z[labels == 1].min())
