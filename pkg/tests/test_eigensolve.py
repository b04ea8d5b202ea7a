import numpy as np
import pytest
import scipy.sparse as sp

from wgspec.eigensolve import (ShiftInvert, hermitian_defect, lanczos, lowest_eigenpairs, pcg, solve_shifted)
from wgspec.errors import NotConverged, ShiftSingular


def laplacian(n, L=np.pi):
    h = L / (n + 1)
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr") / h**2


def test_dirichlet_laplacian():
    res = lowest_eigenpairs(laplacian(2000), 3)
    np.testing.assert_allclose(res.eigenvalues, [1, 4, 9], rtol=2e-6)


def test_plain_lanczos_path():
    rng = np.random.default_rng(3)
    d = np.concatenate([[1.0, 2.0, 3.0], 10 + rng.uniform(0, 5, 2997)])
    Q = sp.diags(d).tocsr()
    res = lowest_eigenpairs(Q, 3)
    assert res.stats["method"] == "lanczos"
    np.testing.assert_allclose(res.eigenvalues, [1, 2, 3], atol=1e-9)


def test_dense_path_small():
    res = lowest_eigenpairs(sp.diags([3.0, 1.0, 2.0]).tocsr(), 2)
    np.testing.assert_allclose(res.eigenvalues, [1, 2])
    assert res.stats["method"] == "dense"


def test_harmonic_oscillator_shift_invert():
    n = 4000
    x = np.linspace(-12, 12, n + 2)[1:-1]
    h = x[1] - x[0]
    H = laplacian(n, 24.0) + sp.diags(x**2)
    res = lowest_eigenpairs(H.tocsr(), 3, sigma=0.0)
    np.testing.assert_allclose(res.eigenvalues, [1, 3, 5], atol=1e-4)
    assert np.all(res.residuals <= 1e-9 * (np.abs(res.eigenvalues) + 4 / h**2 + 144))


def test_complex_hermitian_against_dense():
    rng = np.random.default_rng(0)
    n = 2100
    theta = rng.uniform(-np.pi, np.pi, n - 1)
    off = -np.exp(1j * theta)
    H = sp.diags([off.conj(), 2 + rng.uniform(0, 1, n), off], [-1, 0, 1], format="csr")
    assert hermitian_defect(H) == 0.0
    res = lowest_eigenpairs(H, 4, sigma=-0.5)
    dense = np.linalg.eigvalsh(H.toarray())[:4]
    np.testing.assert_allclose(res.eigenvalues, dense, atol=1e-9)


def test_deterministic():
    H = laplacian(2500)
    a = lowest_eigenpairs(H, 3, sigma=0.0).eigenvalues
    b = lowest_eigenpairs(H, 3, sigma=0.0).eigenvalues
    assert np.array_equal(a, b)


def test_not_converged():
    with pytest.raises(NotConverged):
        lowest_eigenpairs(laplacian(3000), 3, max_iter=20)


def test_k_out_of_range():
    with pytest.raises(ValueError):
        lowest_eigenpairs(laplacian(10), 0)


def test_solve_shifted_diagonal():
    d = np.array([1.0, 2.0, 4.0])
    x = solve_shifted(sp.diags(d).tocsr(), 0.0, np.array([1.0, 1.0, 1.0]))
    np.testing.assert_allclose(x, 1 / d)


def test_deflated_pseudo_inverse_by_hand():
    # H = [[1,-1,0],[-1,2,-1],[0,-1,1]] has kernel (1,1,1)/sqrt3.  For rhs (1,0,-1)
    # the pseudo-inverse solution orthogonal to the kernel is (1,0,-1).
    H = sp.csr_matrix(np.array([[1.0, -1, 0], [-1, 2, -1], [0, -1, 1]]))
    k = np.ones(3) / np.sqrt(3)
    x = solve_shifted(H, 0.0, np.array([1.0, 0.0, -1.0]), deflate=k)
    np.testing.assert_allclose(x, [1.0, 0.0, -1.0], atol=1e-12)
    # and rhs (1,-1,0): solution (2/3, -1/3, -1/3)
    x = solve_shifted(H, 0.0, np.array([1.0, -1.0, 0.0]), deflate=k)
    np.testing.assert_allclose(x, [2 / 3, -1 / 3, -1 / 3], atol=1e-12)


def test_pcg_detects_indefinite_shift():
    H = sp.diags([1.0, 2.0, 3.0]).tocsr()
    with pytest.raises(ShiftSingular):
        pcg(H - 2.5 * sp.identity(3), np.ones(3))


def test_shift_invert_lu_matches_solve():
    H = laplacian(50)
    op = ShiftInvert(H, -1.0)
    b = np.arange(50.0)
    np.testing.assert_allclose((H + sp.identity(50)) @ op(b), b, atol=1e-9)


def test_lanczos_returns_orthonormal_basis():
    H = laplacian(400)
    V, m = lanczos(lambda v: H @ v, 400, 3, max_iter=80)
    np.testing.assert_allclose(V.T @ V, np.eye(m), atol=1e-12)
