"""One-dimensional effective Hamiltonians along the base curve.

Every variant produces an EffectiveOperator1D

    kinetic_scale * (-D_theta m D_theta) + V

on the frame grid, with Peierls phases theta_i on the links.  Rescaled
variants represent eps^{-2}(H - lambda_ref); raw ones represent H itself.
"""

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .cross_section import lambda02 as lambda02_of
from .eigensolve import lowest_eigenpairs
from .errors import ClosedCurveUnsupported, NotRigid, UnsupportedFiber
from .magnetics import rotation

VARIANTS = ("nonmagnetic", "moderate", "rigid_moderate", "strong_alpha0", "rigid_strong", "hollow_strong")


@dataclass(frozen=True, eq=False)
class EffectiveOperator1D:
    grid: np.ndarray
    metric_weight: np.ndarray
    potential: np.ndarray
    link_phase: np.ndarray
    boundary: str
    epsilon: float
    energy_offset: float
    variant: str
    scale: str = "rescaled"  # or "raw"
    kinetic_scale: float = 1.0
    lambda0: float = 0.0

    @property
    def flux(self):
        return float(np.sum(self.link_phase)) if self.boundary == "periodic" else None

    @property
    def free_nodes(self):
        n = self.grid.size
        return np.arange(n - 1) if self.boundary == "periodic" else np.arange(1, n - 1)

    def matrix(self):
        """Hermitian matrix on the free nodes (Dirichlet: interior, periodic: all but the last)."""
        n = self.grid.size
        h = self.grid[1] - self.grid[0]
        m_link = 0.5 * (self.metric_weight[:-1] + self.metric_weight[1:]) * self.kinetic_scale / h**2
        theta = self.link_phase
        if self.boundary == "periodic":
            N = n - 1
            i = np.arange(N)
            j = (i + 1) % N
        else:
            N = n - 2
            i = np.arange(n - 1) - 1  # link k joins node k and k+1; free index = node - 1
            j = i + 1
        diag = np.zeros(N, dtype=float)
        np.add.at(diag, i[(i >= 0) & (i < N)], m_link[(i >= 0) & (i < N)])
        np.add.at(diag, j[(j >= 0) & (j < N)], m_link[(j >= 0) & (j < N)])
        nodes = self.free_nodes
        diag = diag + self.potential[nodes]
        both = (i >= 0) & (i < N) & (j >= 0) & (j < N)
        ii, jj = i[both], j[both]
        off = -m_link[both] * np.exp(1j * theta[both])
        if not np.any(theta):
            off = off.real
        rows = np.concatenate([ii, jj, np.arange(N)])
        cols = np.concatenate([jj, ii, np.arange(N)])
        vals = np.concatenate([off, np.conj(off), diag])
        return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))

    def spectrum(self, k=6):
        """(raw, rescaled) lowest k eigenvalues."""
        H = self.matrix()
        k = min(k, H.shape[0])
        w = lowest_eigenpairs(H, k, vectors=False, sigma=_lower_bound(H) if H.shape[0] > 2048 else None).eigenvalues
        if self.scale == "rescaled":
            return self.energy_offset + self.epsilon**2 * w, w
        return w, (w - self.lambda0) / self.epsilon**2

    def to_csv(self, path):
        theta = np.append(self.link_phase, np.nan)
        np.savetxt(path, np.column_stack([self.grid, self.metric_weight, self.potential, theta]),
                   delimiter=",", header="x,m,V,theta", comments="")

    def to_matrix_market(self, path):
        scipy.io.mmwrite(path, self.matrix(), field="complex" if np.any(self.link_phase) else "real",
                         symmetry="hermitian" if np.any(self.link_phase) else "symmetric")


def _lower_bound(H):
    """Gershgorin lower bound minus a margin; a safe shift below the spectrum."""
    H = H.tocsr()
    d = H.diagonal().real
    r = np.asarray(abs(H).sum(axis=1)).ravel() - np.abs(d)
    return float(np.min(d - r)) - 1.0


def _phases(grid, a):
    """theta_i = int_{x_i}^{x_{i+1}} a dx by the trapezoid rule."""
    h = grid[1] - grid[0]
    return 0.5 * h * (a[:-1] + a[1:])


def _boundary(frame):
    return "periodic" if frame.closed else "dirichlet"


def _geometry(frame, fiber):
    x = frame.grid
    ell = fiber.scale_values(x)
    dell = fiber.scale_values(x, 1)
    ddell = fiber.scale_values(x, 2)
    phi = fiber.twist_values(x)
    dphi = fiber.twist_values(x, 1)
    ddphi = fiber.twist_values(x, 2)
    return x, ell, dell, ddell, phi, dphi, ddphi


def _require_massive(fiber):
    if not fiber.massive:
        raise UnsupportedFiber("variant needs a massive fibre")


def _require_rigid(fiber, frame):
    ell = fiber.scale_values(frame.grid)
    if np.ptp(ell) > 1e-12 * max(1.0, np.max(np.abs(ell))):
        raise NotRigid("variant needs a constant scale function")


def _centre_term(frame, fiber, vs):
    """l <r <y>, kappa>: the averaged first-order metric correction."""
    _, ell, _, _, phi, _, _ = _geometry(frame, fiber)
    ry = np.einsum("iab,b->ia", rotation(phi), vs.mean_y)
    return ell * np.einsum("ia,ia->i", ry, frame.kappa), ry


def _hollow_potential(ell, dell, ddell):
    return 0.5 * ddell / ell - 0.25 * (dell / ell) ** 2


def assemble_nonmagnetic(frame, fiber, vs, eps):
    x, ell, dell, ddell, phi, dphi, _ = _geometry(frame, fiber)
    k2 = frame.kappa1**2 + frame.kappa2**2
    if fiber.massive:
        _require_rigid(fiber, frame)
        theta0, _ = _centre_term(frame, fiber, vs)
        m = 1.0 + 2.0 * eps * theta0
        V = dphi**2 * vs.Lnorm_sq - 0.25 * k2
        lam = vs.lambda0 / ell[0] ** 2
    else:
        m = np.ones_like(x)
        V = _hollow_potential(ell, dell, ddell)
        lam = 0.0
    return EffectiveOperator1D(x, m, V, np.zeros(x.size - 1), _boundary(frame), eps, lam, "nonmagnetic",
                               lambda0=lam)


def _first_order_potential(frame, fiber, vs, foc):
    """A_1(d_x) = B_perp x l r <y> on the grid (zero for the hollow circle)."""
    if not fiber.massive:
        return np.zeros(frame.grid.size)
    _, ell, _, _, phi, _, _ = _geometry(frame, fiber)
    ry = np.einsum("iab,b->ia", rotation(phi), vs.mean_y)
    return ell * (foc.Bperp1 * ry[:, 1] - foc.Bperp2 * ry[:, 0])


def _base_potential(frame, foc, gauge_base):
    """A_B on the grid, or zero when it is gauged away (open curves only)."""
    if gauge_base and not frame.closed:
        return np.zeros(frame.grid.size)
    return foc.AB


def assemble_moderate(frame, fiber, vs, foc, eps, gauge_base=True):
    op = assemble_nonmagnetic(frame, fiber, vs, eps)
    a = _base_potential(frame, foc, gauge_base) + eps * _first_order_potential(frame, fiber, vs, foc)
    return _with(op, link_phase=_phases(frame.grid, a), variant="moderate")


def _with(op, **kw):
    from dataclasses import replace

    return replace(op, **kw)


def assemble_rigid_moderate(frame, fiber, vs, foc, eps, gauge_base=True):
    """Rescaled sigma=0 operator for rigid massive tubes with its O(eps) potentials."""
    _require_massive(fiber)
    _require_rigid(fiber, frame)
    x, ell, _, _, phi, dphi, ddphi = _geometry(frame, fiber)
    kappa = frame.kappa
    dk, ddk = frame.kappa_derivatives()
    k2 = np.sum(kappa**2, axis=1)
    R = rotation(phi)
    # g(y) = l <r y, kappa> = ktil . y with ktil = l r^T kappa
    ktil = ell[:, None] * np.einsum("iba,ib->ia", R, kappa)
    dRT = np.stack([np.stack([-np.sin(phi), np.cos(phi)], -1), np.stack([-np.cos(phi), -np.sin(phi)], -1)], -2)
    dktil = ell[:, None] * (dphi[:, None] * np.einsum("iab,ib->ia", dRT, kappa) + np.einsum("iba,ib->ia", R, dk))
    coeff = dktil * dphi[:, None] + ktil * ddphi[:, None]  # (g phi')' as a linear form in y
    v_bh = dphi**2 * vs.Lnorm_sq + 2 * eps * (coeff @ vs.yL + dphi**2 * (ktil @ vs.LyL))
    theta0, ry = _centre_term(frame, fiber, vs)
    lry = ell[:, None] * ry
    v_bend = -0.25 * k2 - 0.5 * eps * (k2 * np.einsum("ia,ia->i", lry, kappa) + np.einsum("ia,ia->i", lry, ddk))
    m = 1.0 + 2.0 * eps * theta0
    a = _base_potential(frame, foc, gauge_base) + eps * _first_order_potential(frame, fiber, vs, foc)
    lam = vs.lambda0 / ell[0] ** 2
    return EffectiveOperator1D(x, m, v_bh + v_bend, _phases(x, a), _boundary(frame), eps, lam, "rigid_moderate",
                               lambda0=lam)


def assemble_strong_alpha0(frame, fiber, vs, foc, eps, gauge_base=True):
    """Unrescaled sigma=1 operator: -eps^2 m Laplacian with eps^{-1}(A_B + eps A_1) phases, plus lambda0/l^2."""
    _require_massive(fiber)
    x, ell, _, _, _, _, _ = _geometry(frame, fiber)
    theta0, _ = _centre_term(frame, fiber, vs)
    a = _base_potential(frame, foc, gauge_base) / eps + _first_order_potential(frame, fiber, vs, foc)
    lam_min = float(np.min(vs.lambda0 / ell**2))
    return EffectiveOperator1D(x, 1.0 + 2.0 * eps * theta0, vs.lambda0 / ell**2, _phases(x, a), _boundary(frame),
                               eps, 0.0, "strong_alpha0", scale="raw", kinetic_scale=eps**2, lambda0=lam_min)


def assemble_rigid_strong(frame, fiber, vs, foc, eps, lambda02_fn=None):
    """Rescaled sigma=1 operator for rigid massive tubes (A_B gauged away)."""
    _require_massive(fiber)
    _require_rigid(fiber, frame)
    if frame.closed:
        raise ClosedCurveUnsupported("strong-field rigid operator is only provided for open curves")
    x, ell, _, _, phi, dphi, _ = _geometry(frame, fiber)
    R = rotation(phi)
    u = np.stack([-foc.Bperp2, foc.Bperp1], axis=1)  # B_perp x v = u . v
    ru = np.einsum("iba,ib->ia", R, u)  # r^T u
    quad = ell**2 * np.einsum("ia,ab,ib->i", ru, vs.second_moment, ru)
    a1 = ell * (ru @ vs.mean_y)
    if lambda02_fn is None:
        lam02 = lambda02_of(vs, foc.Bpar, scale=ell)
    else:
        lam02 = lambda02_fn(foc.Bpar, ell)
    k2 = frame.kappa1**2 + frame.kappa2**2
    V = lam02 - 0.25 * k2 + dphi**2 * vs.Lnorm_sq + quad - a1**2
    lam = vs.lambda0 / ell[0] ** 2
    return EffectiveOperator1D(x, np.ones_like(x), V, _phases(x, a1), "dirichlet", eps, lam, "rigid_strong",
                               lambda0=lam)


def assemble_hollow_strong(frame, fiber, vs, foc, eps):
    if fiber.massive:
        raise UnsupportedFiber("hollow_strong needs the hollow circle fibre")
    if frame.closed:
        raise ClosedCurveUnsupported("hollow strong-field operator is only provided for open curves")
    x, ell, dell, ddell, _, _, _ = _geometry(frame, fiber)
    V = _hollow_potential(ell, dell, ddell) + 0.25 * ell**2 * (foc.Bpar**2 + 2 * (foc.Bperp1**2 + foc.Bperp2**2))
    return EffectiveOperator1D(x, np.ones_like(x), V, np.zeros(x.size - 1), "dirichlet", eps, 0.0, "hollow_strong")


def assemble(variant, frame, fiber, vs, foc, eps, **kw):
    if variant == "nonmagnetic":
        return assemble_nonmagnetic(frame, fiber, vs, eps)
    if variant == "moderate":
        return assemble_moderate(frame, fiber, vs, foc, eps, **kw)
    if variant == "rigid_moderate":
        return assemble_rigid_moderate(frame, fiber, vs, foc, eps, **kw)
    if variant == "strong_alpha0":
        return assemble_strong_alpha0(frame, fiber, vs, foc, eps, **kw)
    if variant == "rigid_strong":
        return assemble_rigid_strong(frame, fiber, vs, foc, eps, **kw)
    if variant == "hollow_strong":
        return assemble_hollow_strong(frame, fiber, vs, foc, eps)
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
