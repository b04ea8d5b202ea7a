"""Lowest eigenpairs of sparse Hermitian matrices and shifted linear solves.

Small problems go through dense LAPACK.  Larger ones use Lanczos with full
reorthogonalisation (repeated when needed), either on H itself or on a shifted
inverse (H - sigma)^{-1} supplied by a sparse LU or by preconditioned CG.
The final eigenpairs are always Rayleigh-Ritz values of H on the Krylov
basis, with true residuals.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NotConverged, ShiftSingular

DENSE_THRESHOLD = 2048
SOLVER_TOL = 1e-9
SEED = 20240607


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray]
    residuals: np.ndarray
    stats: dict = field(default_factory=dict)


def hermitian_defect(H):
    """max |H - H^*| over stored entries (0.0 for exactly Hermitian input)."""
    if sp.issparse(H):
        D = (H - H.conj().T).tocoo()
        return float(np.max(np.abs(D.data))) if D.nnz else 0.0
    H = np.asarray(H)
    return float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0


def norm_estimate(H):
    if sp.issparse(H):
        return float(abs(H).sum(axis=1).max())
    return float(np.max(np.sum(np.abs(H), axis=1)))


def _as_matvec(H):
    if callable(H):
        return H
    return lambda v: H @ v


def _start_vector(n, dtype, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    if np.issubdtype(dtype, np.complexfloating):
        v = v + 1j * rng.standard_normal(n)
    return (v / np.linalg.norm(v)).astype(dtype)


def _rayleigh_ritz(H, V, k, want_lowest=True):
    """Ritz pairs of H on the orthonormal columns of V (n x m)."""
    HV = np.column_stack([H @ V[:, j] for j in range(V.shape[1])])
    T = V.conj().T @ HV
    T = 0.5 * (T + T.conj().T)
    w, S = np.linalg.eigh(T)
    idx = np.arange(k) if want_lowest else np.argsort(w)[:k]
    w, S = w[idx], S[:, idx]
    X = V @ S
    R = HV @ S - X * w[None, :]
    return w, X, np.linalg.norm(R, axis=0)


def lanczos(op, n, k, dtype=float, tol=SOLVER_TOL, max_iter=None, seed=SEED,
            which="smallest", check_every=10, converged=None, min_iter=None):
    """Lanczos with full reorthogonalisation on a Hermitian operator.

    Returns (basis V, Ritz values, Ritz vectors in the basis).  ``which`` picks
    the smallest or largest end of op's spectrum.  ``converged`` is an optional
    callback (V) -> bool that replaces the internal residual-estimate test.
    """
    if max_iter is None:
        max_iter = min(n, max(60 * k, 3000))
    max_iter = min(max_iter, n)
    V = np.zeros((max_iter + 1, n), dtype=dtype)  # rows are basis vectors
    alpha = np.zeros(max_iter)
    beta = np.zeros(max_iter)
    V[0] = _start_vector(n, dtype, seed)
    m = 0
    if min_iter is None:
        min_iter = min(max_iter, 2 * k + 8)
    scale = 0.0
    for j in range(max_iter):
        w = op(V[j])
        a = np.vdot(V[j], w).real
        alpha[j] = a
        w = w - a * V[j] - (beta[j - 1] * V[j - 1] if j > 0 else 0.0)
        # full reorthogonalisation; a second pass only when cancellation was severe
        b0 = np.linalg.norm(w)
        w -= (V[: j + 1].conj() @ w) @ V[: j + 1]
        b = np.linalg.norm(w)
        if b < 0.7071 * b0:
            w -= (V[: j + 1].conj() @ w) @ V[: j + 1]
            b = np.linalg.norm(w)
        beta[j] = b
        m = j + 1
        scale = max(scale, abs(a) + b)
        if b <= 1e-14 * max(scale, 1.0):
            break  # invariant subspace
        V[j + 1] = w / b
        if m >= min_iter and (m % max(check_every, m // 20) == 0 or m == max_iter):
            if converged is not None:
                if converged(V[:m].T):
                    break
                continue
            kk = min(k, m)
            rng = (0, kk - 1) if which == "smallest" else (m - kk, m - 1)
            _, S = sla.eigh_tridiagonal(alpha[:m], beta[: m - 1], select="i", select_range=rng)
            if np.all(np.abs(b * S[-1]) <= tol * max(scale, 1.0)):
                break
    return V[:m].T, m


class ShiftInvert:
    """Action of (H - sigma)^{-1}; exact LU or preconditioned CG."""

    def __init__(self, H, sigma, method="lu", preconditioner=None, coarse=None, tol=1e-11, maxiter=5000):
        self.H = H.tocsc() if sp.issparse(H) else H
        self.sigma = float(sigma)
        self.method = method
        self.iterations = []
        n = H.shape[0]
        A = (H - self.sigma * sp.identity(n, dtype=H.dtype, format="csc")).tocsc()
        self.A = A
        if method == "lu":
            self.lu = spla.splu(A, permc_spec="COLAMD" if n < 2000 else "MMD_AT_PLUS_A")
        else:
            self.M = preconditioner
            self.coarse = coarse
            self.tol = tol
            self.maxiter = maxiter

    def __call__(self, v):
        if self.method == "lu":
            return self.lu.solve(v)
        x, its = pcg(self.A, v, tol=self.tol, maxiter=self.maxiter, M=self.M, coarse=self.coarse)
        self.iterations.append(its)
        return x


def pcg(A, b, tol=1e-10, maxiter=5000, M=None, coarse=None, deflate=None, x0=None):
    """Preconditioned CG for Hermitian positive definite A.

    ``coarse`` = (Z, Ac_lu) adds an additive two-level correction
    Z Ac^{-1} Z^* to the preconditioner.  ``deflate`` (n x d, orthonormal)
    restricts the iteration to the orthogonal complement of its columns.
    Raises ShiftSingular on non-positive curvature.
    """
    matvec = _as_matvec(A)

    def proj(v):
        if deflate is None:
            return v
        return v - deflate @ (deflate.conj().T @ v)

    def prec(r):
        z = M(r) if M is not None else r.copy()
        if coarse is not None:
            Z, lu = coarse
            z = z + Z @ lu.solve(Z.conj().T @ r)
        return proj(z)

    b = proj(np.asarray(b))
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b), 0
    x = np.zeros_like(b) if x0 is None else proj(np.asarray(x0, dtype=b.dtype))
    r = b - proj(matvec(x)) if x0 is not None else b.copy()
    z = prec(r)
    p = z.copy()
    rz = np.vdot(r, z).real
    for it in range(1, maxiter + 1):
        Ap = proj(matvec(p))
        pAp = np.vdot(p, Ap).real
        if pAp <= 0:
            raise ShiftSingular(f"non-positive curvature {pAp:.3e} at CG step {it}")
        a = rz / pAp
        x += a * p
        r -= a * Ap
        if np.linalg.norm(r) <= tol * bnorm:
            return x, it
        z = prec(r)
        rz_new = np.vdot(r, z).real
        if rz_new <= 0:
            raise ShiftSingular(f"indefinite preconditioner at CG step {it}")
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NotConverged(f"CG did not reach {tol:g} in {maxiter} steps", iterations=maxiter,
                       residuals=[np.linalg.norm(r) / bnorm])


def solve_shifted(H, shift, rhs, deflate=None, tol=SOLVER_TOL, maxiter=20000, preconditioner=None):
    """Solve (H - shift) v = rhs on the complement of the deflation vectors."""
    Q = None
    if deflate is not None:
        Q = np.atleast_2d(np.asarray(deflate))
        if Q.shape[0] != H.shape[0]:
            Q = Q.T
        Q, _ = np.linalg.qr(Q)
    if sp.issparse(H) or isinstance(H, np.ndarray):
        A = lambda v: H @ v - shift * v
    else:
        A = lambda v: H(v) - shift * v
    x, _ = pcg(A, np.asarray(rhs), tol=tol, maxiter=maxiter, M=preconditioner, deflate=Q)
    return x


def lowest_eigenpairs(H, k, solver_tol=SOLVER_TOL, sigma=None, inverse=None, vectors=True,
                      seed=SEED, max_iter=None, extra=4):
    """Lowest k eigenpairs of a Hermitian matrix.

    With ``sigma`` (below the wanted eigenvalues) Lanczos runs on the shifted
    inverse: ``inverse`` may be a ready ShiftInvert, otherwise a sparse LU is
    built.  The lowest ``k`` of ``k + extra`` Ritz pairs are returned.
    """
    n = H.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    hnorm = norm_estimate(H)
    if n <= DENSE_THRESHOLD and inverse is None:
        Hd = H.toarray() if sp.issparse(H) else np.asarray(H)
        w, X = sla.eigh(Hd, subset_by_index=[0, k - 1], driver="evr")
        R = np.linalg.norm(Hd @ X - X * w[None, :], axis=0)
        return EigenResult(w, X if vectors else None, R, {"method": "dense", "n": n})

    dtype = np.complex128 if np.iscomplexobj(H.data if sp.issparse(H) else H) else np.float64
    kk = min(n, k + extra)
    if sigma is None and inverse is None:
        V, m = lanczos(lambda v: H @ v, n, kk, dtype=dtype, tol=solver_tol, max_iter=max_iter, seed=seed)
        method = "lanczos"
    else:
        if inverse is None:
            inverse = ShiftInvert(H, sigma)

        def done(Vm):
            w, _, R = _rayleigh_ritz(H, Vm, k)
            return np.all(R <= solver_tol * (np.abs(w) + hnorm))

        V, m = lanczos(inverse, n, kk, dtype=dtype, tol=solver_tol, max_iter=max_iter or min(n, 300),
                       seed=seed, which="largest", check_every=5, converged=done, min_iter=kk + 2)
        method = "shift-invert lanczos"
    w, X, R = _rayleigh_ritz(H, V, k)
    ok = R <= solver_tol * (np.abs(w) + hnorm)
    stats = {"method": method, "n": n, "iterations": m, "norm_estimate": hnorm}
    if inverse is not None and getattr(inverse, "iterations", None):
        stats["inner_iterations"] = list(inverse.iterations)
    if not np.all(ok):
        raise NotConverged(f"{method}: {np.sum(~ok)} of {k} residuals above tolerance after {m} steps",
                           iterations=m, residuals=R)
    return EigenResult(w, X if vectors else None, R, stats)
