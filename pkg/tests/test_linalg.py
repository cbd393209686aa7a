import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from randsdr.linalg import (
    ConvergenceError,
    RankDeficiencyError,
    RngStream,
    TruncatedSVD,
    as_matrix,
    as_stream,
    dense_svd,
    gaussian_matrix,
    orthonormal_basis,
    principal_angles,
    pseudoinverse,
    qr_orthonormalize,
    symmetric_eig,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def matrices(max_rows=12, max_cols=12):
    return st.tuples(st.integers(1, max_rows), st.integers(1, max_cols)).flatmap(
        lambda s: arrays(np.float64, s, elements=finite))


# --- randomness -------------------------------------------------------------

def test_gaussian_matrix_is_deterministic():
    a = gaussian_matrix(2, 2, RngStream(7))
    b = gaussian_matrix(2, 2, RngStream(7))
    assert a.tobytes() == b.tobytes()


def test_streams_differ_and_children_are_stable():
    base = RngStream(7)
    assert not np.array_equal(gaussian_matrix(3, 3, base), gaussian_matrix(3, 3, RngStream(7, 1)))
    assert base.child("a", 1) == RngStream(7).child("a", 1)
    assert base.child("a", 1) != base.child("a", 2)
    assert not np.array_equal(gaussian_matrix(4, 1, base.child("x")), gaussian_matrix(4, 1, base.child("y")))


def test_gaussian_matrix_moments():
    Z = gaussian_matrix(400, 50, RngStream(3))
    assert abs(Z.mean()) < 0.02
    assert abs(Z.var() - 1.0) < 0.02


def test_seed_bounds_and_coercion():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(2**64)
    assert as_stream(5) == RngStream(5)
    assert as_stream(None) == RngStream(0)
    with pytest.raises(TypeError):
        as_stream("seed")
    with pytest.raises(ValueError):
        gaussian_matrix(0, 3, 1)


def test_as_matrix_rejects_bad_input():
    with pytest.raises(ValueError, match="NaN"):
        as_matrix([[1.0, np.nan]])
    with pytest.raises(ValueError, match="2-D"):
        as_matrix([1.0, 2.0])
    with pytest.raises(ValueError):
        as_matrix(np.zeros((0, 3)))


# --- QR ---------------------------------------------------------------------

def test_qr_identity():
    assert np.allclose(qr_orthonormalize(np.eye(4)), np.eye(4), atol=1e-15)


def test_qr_preserves_span(gen):
    for _ in range(20):
        A = gen.standard_normal((20, 5))
        Q = qr_orthonormalize(A)
        assert np.max(np.abs(Q.T @ Q - np.eye(5))) < 1e-12
        assert np.linalg.norm(Q @ (Q.T @ A) - A) / np.linalg.norm(A) < 1e-10


def test_qr_duplicate_column_names_the_column(gen):
    A = gen.standard_normal((6, 3))
    A = np.column_stack([A, A[:, 1]])
    with pytest.raises(RankDeficiencyError) as err:
        qr_orthonormalize(A)
    assert err.value.column == 3


def test_qr_without_rank_check_still_orthonormal(gen):
    A = gen.standard_normal((8, 2))
    A = np.column_stack([A, A[:, 0], np.zeros(8)])
    Q = qr_orthonormalize(A, check_rank=False)
    assert np.max(np.abs(Q.T @ Q - np.eye(4))) < 1e-12
    assert np.linalg.norm(Q @ (Q.T @ A) - A) < 1e-12


def test_qr_r_factor(gen):
    A = gen.standard_normal((9, 4))
    Q, R = qr_orthonormalize(A, return_r=True)
    assert np.allclose(Q @ R, A, atol=1e-13)
    assert np.all(np.diag(R) > 0)


def test_qr_wide_input_rejected():
    with pytest.raises(ValueError):
        qr_orthonormalize(np.ones((2, 3)))


# --- SVD --------------------------------------------------------------------

def test_svd_diagonal():
    res = dense_svd(np.diag([3.0, 1.0]))
    assert np.allclose(res.S, [3.0, 1.0])
    assert np.allclose(np.abs(res.U), np.eye(2))
    assert np.allclose(np.abs(res.V), np.eye(2))


def test_svd_reconstruction_and_oracle(gen):
    A = gen.standard_normal((30, 8))
    res = dense_svd(A)
    assert np.linalg.norm(res.reconstruct() - A) / np.linalg.norm(A) <= 1e-10
    assert np.allclose(res.S, scipy.linalg.svdvals(A), rtol=1e-12)
    assert np.max(np.abs(res.U.T @ res.U - np.eye(8))) < 1e-10
    assert np.max(np.abs(res.V.T @ res.V - np.eye(8))) < 1e-10


def test_svd_transpose_symmetry(gen):
    A = gen.standard_normal((7, 13))
    assert np.allclose(dense_svd(A).S, dense_svd(A.T).S, atol=1e-10)


def test_svd_sign_convention(gen):
    res = dense_svd(gen.standard_normal((10, 4)))
    idx = np.argmax(np.abs(res.U), axis=0)
    assert np.all(res.U[idx, np.arange(4)] > 0)


def test_svd_iteration_cap_reports_diagnostics(gen):
    with pytest.raises(ConvergenceError) as err:
        dense_svd(gen.standard_normal((12, 10)), max_iter=1)
    assert "iterations" in err.value.diagnostics


@pytest.mark.parametrize("A", [
    np.full((2, 2), 2.2250738585072014e-308),
    np.full((2, 2), 4.33904521e-243),
    np.pad([[1.0]], ((0, 2), (0, 6)), constant_values=2.2250738585072014e-308),
])
def test_svd_tiny_magnitudes(A):
    res = dense_svd(A)
    assert np.all(np.isfinite(res.U)) and np.all(np.isfinite(res.V))
    assert np.linalg.norm(res.reconstruct() - A) <= 1e-10 * max(np.linalg.norm(A), 1.0)
    assert res.S[0] == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-12)


def test_svd_orthonormal_tall_input_converges():
    # R of a QR of orthonormal columns is the identity up to rounding
    gen = np.random.default_rng(2)
    for _ in range(200):
        Q = np.linalg.qr(gen.standard_normal((25, 9)) @ gen.standard_normal((9, 9)))[0]
        res = dense_svd(Q)
        assert np.allclose(res.S, 1.0, atol=1e-13)


def test_svd_rejects_large_problems():
    with pytest.raises(ValueError, match="small problems"):
        dense_svd(np.ones((2001, 2001)))


@given(matrices())
def test_svd_property_reconstructs(A):
    res = dense_svd(A)
    scale = max(np.linalg.norm(A), 1.0)
    assert np.linalg.norm(res.reconstruct() - A) <= 1e-10 * scale
    assert np.all(np.diff(res.S) <= 0) and np.all(res.S >= 0)


@given(matrices(10, 6))
def test_svd_matches_eig_of_gram(A):
    s = dense_svd(A).S
    ev, _ = symmetric_eig(A.T @ A)
    ev = np.sqrt(np.clip(ev[: s.size], 0, None))
    assert np.allclose(s, ev, rtol=1e-7, atol=1e-6 * max(1.0, s[0]))


@given(st.integers(1, 6).flatmap(lambda k: st.tuples(*[arrays(np.float64, (k, k), elements=finite)] * 3)))
def test_matrix_product_associativity(triple):
    A, B, C = triple
    left, right = (A @ B) @ C, A @ (B @ C)
    scale = np.linalg.norm(np.abs(A) @ np.abs(B) @ np.abs(C)) + 1.0
    assert np.linalg.norm(left - right) <= 1e-10 * scale


# --- pseudoinverse ----------------------------------------------------------

def test_pinv_diagonal():
    assert np.allclose(pseudoinverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))


def test_pinv_orthonormal_columns(gen):
    Q, _ = np.linalg.qr(gen.standard_normal((9, 4)))
    assert np.allclose(pseudoinverse(Q), Q.T, atol=1e-12)


def test_pinv_penrose_conditions(gen):
    A = gen.standard_normal((10, 4)) @ gen.standard_normal((4, 6))
    P = pseudoinverse(A)
    assert np.linalg.norm(A @ P @ A - A) <= 1e-8
    assert np.linalg.norm(P @ A @ P - P) <= 1e-8
    assert np.linalg.norm((A @ P).T - A @ P) <= 1e-8
    assert np.linalg.norm((P @ A).T - P @ A) <= 1e-8
    assert np.allclose(P, scipy.linalg.pinv(A), atol=1e-10)


def test_pinv_zero_matrix():
    assert np.array_equal(pseudoinverse(np.zeros((3, 2))), np.zeros((2, 3)))


# --- symmetric eigen --------------------------------------------------------

def test_eig_diagonal():
    ev, V = symmetric_eig(np.diag([5.0, 2.0, -1.0]))
    assert np.allclose(ev, [5.0, 2.0, -1.0])
    assert np.allclose(np.abs(V), np.eye(3))


def test_eig_psd(gen):
    B = gen.standard_normal((7, 5))
    ev, _ = symmetric_eig(B.T @ B)
    assert np.all(ev >= -1e-10)


def test_eig_reconstruction(gen):
    M = gen.standard_normal((12, 12))
    A = M + M.T
    ev, V = symmetric_eig(A)
    assert np.linalg.norm(A @ V - V * ev) <= 1e-9 * np.linalg.norm(A)
    assert np.allclose(ev, np.sort(np.linalg.eigvalsh(A))[::-1], atol=1e-10)


def test_eig_rejects_asymmetric():
    with pytest.raises(ValueError, match="not symmetric"):
        symmetric_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


# --- subspaces --------------------------------------------------------------

def test_principal_angles_match_scipy(gen):
    for _ in range(10):
        A = gen.standard_normal((15, 3))
        B = gen.standard_normal((15, 4))
        ours = principal_angles(A, B)
        ref = np.sort(scipy.linalg.subspace_angles(A, B))
        assert np.allclose(ours, ref, atol=1e-12)


def test_principal_angles_resolve_tiny_angles(gen):
    Q, _ = np.linalg.qr(gen.standard_normal((20, 3)))
    E = 1e-12 * gen.standard_normal((20, 3))
    ang = principal_angles(Q, Q + E)
    assert np.all(ang < 1e-11) and ang.max() > 1e-14


def test_orthonormal_basis_rank(gen):
    A = gen.standard_normal((8, 2)) @ gen.standard_normal((2, 5))
    assert orthonormal_basis(A).shape == (8, 2)


def test_truncated_svd_truncate(gen):
    res = dense_svd(gen.standard_normal((6, 4)))
    t = res.truncate(2)
    assert isinstance(t, TruncatedSVD) and t.rank == 2 and t.U.shape == (6, 2)
