import numpy as np
import pytest
from hypothesis import given, strategies as st

from randsdr.linalg import RngStream, dense_svd
from randsdr.simgen import (
    accuracy,
    aedr,
    gen_latent_factor,
    gen_lowrank_noise,
    gen_xor,
    latent_factor_sample,
    mspe_r2,
    reconstruction_error,
    singular_value_error,
)


def test_lowrank_structure():
    ds = gen_lowrank_noise(50, 70, 5, 2.0, rng=3)
    tr = ds.truth
    assert ds.X.shape == (50, 70) and ds.y is None
    assert np.all(np.diff(tr["S"]) < 0)
    assert tr["S"][-1] > tr["nu0"]
    assert np.allclose(tr["U"].T @ tr["U"], np.eye(5), atol=1e-12)
    assert np.allclose(tr["V"].T @ tr["V"], np.eye(5), atol=1e-12)
    assert tr["noise_sd"] == pytest.approx(np.sqrt(1 / 50))
    E = ds.X - (tr["U"] * tr["S"]) @ tr["V"].T
    assert np.std(E) == pytest.approx(tr["noise_sd"], rel=0.05)
    # nu0 = kappa * top singular value of a noise matrix of the same law
    assert tr["nu0"] / 2.0 == pytest.approx(np.linalg.norm(E, 2), rel=0.1)


def test_lowrank_deterministic_and_streams():
    a = gen_lowrank_noise(20, 30, 3, 1.0, rng=RngStream(9, 1))
    b = gen_lowrank_noise(20, 30, 3, 1.0, rng=RngStream(9, 1))
    c = gen_lowrank_noise(20, 30, 3, 1.0, rng=RngStream(9, 2))
    assert a.X.tobytes() == b.X.tobytes()
    assert not np.array_equal(a.X, c.X)
    assert (a.seed, a.stream) == (9, 1)


def test_lowrank_checks():
    with pytest.raises(ValueError):
        gen_lowrank_noise(5, 6, 6, 1.0)


def test_lowrank_unit_noise():
    ds = gen_lowrank_noise(40, 40, 2, 1.0, rng=1, noise_var=1.0)
    assert ds.truth["noise_sd"] == 1.0


def test_xor_noise_free_parity():
    ds = gen_xor(200, 5, d_star=2, sigma=0.0, rng=4)
    X, y = ds.X, ds.y
    assert set(np.unique(X[:, :2])) == {-2.0, 2.0}
    assert np.all(X[:, 2:] == 0)
    assert np.array_equal(y, (np.sign(X[:, 0]) != np.sign(X[:, 1])).astype(int))
    assert ds.truth["basis"].shape == (5, 2)


@given(st.integers(1, 6), st.floats(0.0, 1.0))
def test_xor_labels_are_parity(d, pi):
    ds = gen_xor(30, 8, d_star=d, sigma=0.0, pi=pi, rng=1)
    assert np.array_equal(ds.y, np.sum(ds.X[:, :d] < 0, axis=1) % 2)


def test_xor_checks():
    with pytest.raises(ValueError):
        gen_xor(10, 3, d_star=4)
    with pytest.raises(ValueError):
        gen_xor(10, 3, d_star=2, pi=1.5)


def test_latent_truth_consistent():
    ds = gen_latent_factor(100, 40, d_star=6, rng=2)
    tr = ds.truth
    B, s, theta = tr["B"], tr["s"], tr["theta"]
    cov_x = (B * s ** 2) @ B.T + tr["psi2"] * np.eye(40)
    cov_xy = B @ (s * theta)
    assert np.allclose(tr["b_true"], np.linalg.solve(cov_x, cov_xy), atol=1e-10)
    assert np.min(s ** 2) / (np.min(s ** 2) + tr["psi2"]) == pytest.approx(tr["s2n_x"])
    assert theta @ theta / (theta @ theta + tr["tau2"]) == pytest.approx(tr["s2n_y"])
    assert 0.3 <= tr["s2n_x"] <= 0.6 and 0.3 <= tr["s2n_y"] <= 0.6
    assert np.all(np.diff(np.abs(s)) <= 0) and np.all(np.diff(np.abs(theta)) <= 0)


def test_latent_population_regression():
    ds = gen_latent_factor(50, 10, d_star=3, rng=5)
    X, y = latent_factor_sample(ds.truth, 200_000, RngStream(6))
    coef, *_ = np.linalg.lstsq(X - X.mean(0), y - y.mean(), rcond=None)
    assert aedr(ds.truth["b_true"], coef[:, None]) > 0.99


def test_latent_default_rank_range():
    ranks = {gen_latent_factor(20, 30, rng=i).truth["d_star"] for i in range(40)}
    assert min(ranks) >= 5 and max(ranks) <= 20 and len(ranks) > 5


def test_aedr_values():
    b = np.array([1.0, 2.0, 3.0, 4.0])
    assert aedr(b, -2 * b) == pytest.approx(1.0)
    assert aedr(b, np.array([1.0, 3.0, 2.0, 4.0])) == pytest.approx(0.8)
    G = np.eye(4)[:, :2]
    assert aedr(np.array([1.0, 1.0, 0, 0]), G) == pytest.approx(1.0)
    assert aedr(np.array([1.0, 0, 1.0, 0]), G) == pytest.approx(np.sqrt(0.5))


def test_mspe_r2(gen):
    # projections of centered data are centered; only y carries an intercept
    Z = gen.standard_normal((50, 2))
    Z -= Z.mean(axis=0)
    y = Z @ np.array([1.0, -2.0]) + 3.0
    mspe, r2 = mspe_r2(Z, y, Z, y)
    assert mspe < 1e-20 and r2 == pytest.approx(1.0)
    mspe, r2 = mspe_r2(Z[:, 0], y, Z[:, 0], y)
    assert mspe == pytest.approx(np.mean((y - np.polyval(np.polyfit(Z[:, 0], y, 1), Z[:, 0])) ** 2), rel=0.05)
    assert mspe_r2(np.zeros(5), np.arange(5.0), np.zeros(5), np.arange(5.0))[1] == 0.0


def test_error_metrics(gen):
    assert singular_value_error([9.0, 4.5], [10.0, 5.0, 1.0]) == pytest.approx(10.0)
    X = gen.standard_normal((6, 4))
    assert reconstruction_error(X, dense_svd(X)) < 1e-12
    assert accuracy([1, 0, 1, 1], [1, 1, 1, 0]) == 0.5
    with pytest.raises(ValueError):
        accuracy([1, 0], [1])
