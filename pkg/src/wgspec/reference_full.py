"""Direct discretisation of the full magnetic Laplacian on the tube.

Hollow tubes use an (x, angle) grid on the surface, massive tubes an
(x, y1, y2) grid with the fibre lattice of ``cross_section``.  The quadratic
form is assembled as  sum_k c_k |(B psi)_k|^2  with rows of B being
gauge-covariant Peierls differences, so the matrix is Hermitian and
positive semi-definite by construction.  Link phases are line integrals of
the ambient potential along the embedded links (4-point Gauss).
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cross_section import build_lattice
from .eigensolve import ShiftInvert, lowest_eigenpairs
from .errors import (AdmissibilityViolated, EmptyWindow, MemoryBudget, NonPositiveDistance, NotConverged,
                     SeamIncompatible, ShiftSingular, UnsupportedFiber)
from .magnetics import rotation

GAUSS_X, GAUSS_W = np.polynomial.legendre.leggauss(4)
GAUSS_S = 0.5 * (GAUSS_X + 1.0)
GAUSS_W = 0.5 * GAUSS_W
DEFAULT_CAP = 500_000


@dataclass(frozen=True, eq=False)
class FullOperatorAssembly:
    matrix: sp.csr_matrix
    stiffness: sp.csr_matrix
    mass: np.ndarray
    kind: str
    x: np.ndarray
    slices: np.ndarray  # frame-node index of each unknown slice
    n_fiber: int
    sigma: int
    epsilon: float
    boundary_x: str
    lambda0: float
    slice_modes: Optional[np.ndarray] = field(default=None, repr=False)
    info: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.matrix.shape[0]

    def rescale(self, raw):
        return (np.asarray(raw) - self.lambda0) / self.epsilon**2

    def to_matrix_market(self, path):
        scipy.io.mmwrite(path, self.matrix, symmetry="hermitian" if np.iscomplexobj(self.matrix.data) else "symmetric")


def _hermitian(K):
    K = K.tocsr()
    out = (K + K.conj().T) * 0.5
    out.sum_duplicates()
    if not np.iscomplexobj(out.data) or not np.any(out.data.imag):
        out = out.real.tocsr() if np.iscomplexobj(out.data) else out
    return out.tocsr()


def _line_integrals(A, pos, vel, scale):
    """sum_g w_g A(pos_g).vel_g for arrays (n_links, n_gauss, 3)."""
    n, g, _ = pos.shape
    a = A(pos.reshape(-1, 3)).reshape(n, g, 3)
    return scale * np.einsum("g,ngc,ngc->n", GAUSS_W, a, vel)


def _form(rows, cols, vals, weights, n_rows, n):
    B = sp.csr_matrix((vals, (rows, cols)), shape=(n_rows, n))
    return B.conj().T @ sp.diags(weights) @ B


def _x_layout(frame, periodic_x):
    """Frame-node indices of unknown slices and the node reached by stepping past the last one."""
    N = frame.grid.size - 1
    if frame.closed or periodic_x:
        return np.arange(N), True
    return np.arange(1, N), False


def _admissibility(frame, fiber, eps, radius):
    l_max = float(np.max(fiber.scale_values(frame.grid)))
    k_max = float(np.max(np.hypot(frame.kappa1, frame.kappa2)))
    val = eps * l_max * radius * k_max
    if val >= 1.0:
        raise AdmissibilityViolated(f"eps*l_max*R*max|kappa| = {val:.3f} >= 1")
    return val


# --- hollow surface ---------------------------------------------------------

def assemble_hollow_surface(frame, fiber, A, sigma, eps, n_y=64, cap=DEFAULT_CAP, angle_offset=0.0,
                            periodic_x=False):
    if fiber.massive:
        raise UnsupportedFiber("hollow assembly needs the hollow circle fibre")
    if n_y < 32:
        raise ValueError("n_y must be at least 32")
    _admissibility(frame, fiber, eps, 1.0)
    x = frame.grid
    N = x.size - 1
    hx = x[1] - x[0]
    hy = 2 * np.pi / n_y
    yk = angle_offset + hy * np.arange(n_y)
    slices, wrap = _x_layout(frame, periodic_x)
    ns = slices.size
    n = ns * n_y
    if n > cap:
        raise MemoryBudget(f"{n} unknowns exceed the cap {cap}")
    shift = 0
    if frame.closed:
        s = (frame.holonomy_angle or 0.0) / hy
        shift = int(np.rint(s))
        if abs(s - shift) > 1e-6:
            raise SeamIncompatible(f"holonomy {frame.holonomy_angle:.4f} is not a multiple of 2pi/{n_y}")
    col_of = -np.ones(N + 1, dtype=int)
    col_of[slices] = np.arange(ns)
    if wrap:
        col_of[N] = 0

    def gidx(node, k):
        """Global unknown index of frame node ``node`` at angle index k (or -1)."""
        s = col_of[node]
        kk = np.mod(k + (shift if node == N else 0), n_y)
        return np.where(s >= 0, s * n_y + kk, -1)

    ell = fiber.scale_values(x)
    dell = fiber.scale_values(x, 1)
    fac = eps ** (-sigma)
    cy, sy = np.cos(yk), np.sin(yk)

    rows, cols, vals, wts = [], [], [], []
    row0 = 0
    # angle links at every unknown slice
    ymid = yk + 0.5 * hy
    for node in slices:
        c, _, _ = frame.curve.eval(x[node:node + 1])
        e1, e2 = frame.e1[node], frame.e2[node]
        k1, k2 = frame.kappa1[node], frame.kappa2[node]
        ys = yk[:, None] + hy * GAUSS_S[None, :]
        nrm = np.cos(ys)[..., None] * e1 + np.sin(ys)[..., None] * e2
        tng = -np.sin(ys)[..., None] * e1 + np.cos(ys)[..., None] * e2
        pos = c[0] + eps * ell[node] * nrm
        vel = eps * ell[node] * hy * tng
        theta = _line_integrals(A, pos, vel, fac)
        kap = k1 * np.cos(ymid) + k2 * np.sin(ymid)
        S = (1 - eps * ell[node] * kap) ** 2 + (eps * dell[node]) ** 2
        w = hx * hy * np.sqrt(S) / ell[node]
        a = gidx(node, np.arange(n_y))
        b = gidx(node, np.arange(n_y) + 1)
        r = row0 + np.arange(n_y)
        rows += [r, r]
        cols += [a, b]
        vals += [np.full(n_y, -1.0 / hy), np.exp(1j * theta) / hy]
        wts.append(w)
        row0 += n_y
    # x links
    links = range(N) if wrap else range(N)
    for i in links:
        a = gidx(i, np.arange(n_y))
        b = gidx(i + 1, np.arange(n_y))
        if np.all(a < 0) and np.all(b < 0):
            continue
        cpos, cvel, normals = frame.interval_frame(i, GAUSS_S)
        (E1, dE1), (E2, dE2) = normals
        xs = x[i] + hx * GAUSS_S
        lg = fiber.scale_values(xs)
        dlg = fiber.scale_values(xs, 1) * hx
        nrm = cy[:, None, None] * E1[None] + sy[:, None, None] * E2[None]
        dn = cy[:, None, None] * dE1[None] + sy[:, None, None] * dE2[None]
        pos = cpos[None] + eps * lg[None, :, None] * nrm
        vel = cvel[None] + eps * (dlg[None, :, None] * nrm + lg[None, :, None] * dn)
        theta = _line_integrals(A, pos, vel, fac)
        kap = 0.5 * ((frame.kappa1[i] + frame.kappa1[i + 1]) * cy + (frame.kappa2[i] + frame.kappa2[i + 1]) * sy)
        lm = float(fiber.scale_values(x[i] + 0.5 * hx))
        dlm = float(fiber.scale_values(x[i] + 0.5 * hx, 1))
        S = (1 - eps * lm * kap) ** 2 + (eps * dlm) ** 2
        w = hx * hy * eps**2 * lm / np.sqrt(S)
        r = row0 + np.arange(n_y)
        rows += [r, r]
        cols += [a, b]
        vals += [np.full(n_y, -1.0 / hx), np.exp(1j * theta) / hx]
        wts.append(w)
        row0 += n_y
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    keep = cols >= 0
    K = _form(rows[keep], cols[keep], vals[keep], np.concatenate(wts), row0, n)
    # mass: h_x h_y l sqrt(S) at the nodes
    mass = np.empty(n)
    for s, node in enumerate(slices):
        kap = frame.kappa1[node] * cy + frame.kappa2[node] * sy
        S = (1 - eps * ell[node] * kap) ** 2 + (eps * dell[node]) ** 2
        mass[s * n_y:(s + 1) * n_y] = hx * hy * ell[node] * np.sqrt(S)
    K = _hermitian(K)
    d = 1.0 / np.sqrt(mass)
    H = _hermitian(sp.diags(d) @ K @ sp.diags(d))
    return FullOperatorAssembly(H, K, mass, "hollow", x, slices, n_y, sigma, eps,
                                "periodic" if wrap else "dirichlet", 0.0,
                                info={"n_y": n_y, "seam_shift": shift})


# --- massive tube -----------------------------------------------------------

def _seam_permutation(lat, angle):
    """Node permutation realising a lattice rotation by ``angle`` (multiple of pi/2)."""
    q = int(np.rint(angle / (0.5 * np.pi))) % 4
    a, b = lat.ab[:, 0], lat.ab[:, 1]
    for _ in range(q):
        a, b = -b, a
    perm = lat.node_at(a, b)
    if np.any(perm < 0):
        raise SeamIncompatible("fibre mask is not invariant under the seam rotation")
    return perm, q


def seam_rotation(frame, mask, twist_change=0.0):
    """Split the seam rotation into quarter turns q and a remainder.

    Raises SeamIncompatible unless the remainder vanishes or the mask is
    rotationally invariant.
    """
    seam = (frame.holonomy_angle or 0.0) + twist_change
    q = np.rint(seam / (0.5 * np.pi))
    rem = seam - q * 0.5 * np.pi
    if abs(rem) > 1e-9 and mask.symmetry != 0:
        raise SeamIncompatible(f"seam rotation {seam:.4f} rad is not a lattice symmetry of {mask.name}")
    if mask.symmetry not in (0, 4) and q % 4 != 0:
        if not (mask.symmetry == 2 and q % 2 == 0):
            raise SeamIncompatible(f"quarter-turn seam does not map {mask.name} to itself")
    return q, rem


def assemble_massive_tube(frame, fiber, A, sigma, eps, h_F=None, cap=DEFAULT_CAP, lattice=None,
                          periodic_x=False, twist_offset=0.0, lambda0=None):
    """3D finite-volume operator on (x, y1, y2) with the fibre lattice at every x-slice."""
    if not fiber.massive:
        raise UnsupportedFiber("massive assembly needs a massive fibre")
    h = h_F if h_F is not None else fiber.h
    if h is None:
        raise ValueError("fibre mesh step h_F required")
    lat = lattice if lattice is not None else build_lattice(fiber.fiber_mask(), h)
    nF = lat.n
    radius = float(np.max(np.hypot(lat.points[:, 0], lat.points[:, 1]))) + h
    _admissibility(frame, fiber, eps, radius)
    x = frame.grid
    N = x.size - 1
    hx = x[1] - x[0]
    slices, wrap = _x_layout(frame, periodic_x)
    ns = slices.size
    n = ns * nF
    if n > cap:
        raise MemoryBudget(f"{n} unknowns exceed the cap {cap}")

    ell = fiber.scale_values(x)
    dell = fiber.scale_values(x, 1)
    phi = fiber.twist_values(x) + twist_offset
    dphi = fiber.twist_values(x, 1)
    extra_twist = 0.0
    perm = np.arange(nF)
    if frame.closed:
        q, rem = seam_rotation(frame, lat.mask, phi[N] - phi[0])
        if abs(rem) > 1e-9:
            # rotationally invariant fibre: a compensating linear twist leaves the tube unchanged
            extra_twist = -rem
        phi = phi + extra_twist * (x - x[0]) / (x[N] - x[0])
        dphi = dphi + extra_twist / (x[N] - x[0])
        perm, _ = _seam_permutation(lat, q * 0.5 * np.pi)
    twist_fn = lambda xs: (fiber.twist_values(xs) + twist_offset + extra_twist * (xs - x[0]) / (x[N] - x[0]))
    dtwist_fn = lambda xs: fiber.twist_values(xs, 1) + extra_twist / (x[N] - x[0])

    col_of = -np.ones(N + 1, dtype=int)
    col_of[slices] = np.arange(ns)
    if wrap:
        col_of[N] = 0

    def gidx(node, f):
        s = col_of[node]
        if s < 0:
            return np.full(np.shape(f), -1)
        f = np.asarray(f)
        ff = np.where(f >= 0, perm[np.maximum(f, 0)] if node == N and frame.closed else f, -1)
        return np.where(ff >= 0, s * nF + ff, -1)

    fac = eps ** (-sigma)
    y = lat.points
    li, lj = lat.links[:, 0], lat.links[:, 1]
    dvec = y[lj] - y[li]

    def rho_at(node_vals_l, R, kappa, pts):
        ry = pts @ R.T
        return 1.0 - eps * node_vals_l * (ry @ kappa)

    def ylink_phases(node):
        c, _, _ = frame.curve.eval(x[node:node + 1])
        E = np.stack([frame.e1[node], frame.e2[node]], axis=1)  # 3x2
        R = rotation(phi[node])
        M = eps * ell[node] * (E @ R)  # maps y to the normal offset
        ys = y[li][:, None, :] + GAUSS_S[None, :, None] * dvec[:, None, :]
        pos = c[0] + ys @ M.T
        vel = np.broadcast_to((dvec @ M.T)[:, None, :], pos.shape)
        return _line_integrals(A, pos, vel, fac)

    rows, cols, vals, wts = [], [], [], []
    diag = np.zeros(n)
    mass = np.empty(n)
    row0 = 0
    theta_y = {}
    for s, node in enumerate(slices):
        R = rotation(phi[node])
        kap = frame.kappa[node]
        rho = rho_at(ell[node], R, kap, y)
        th = ylink_phases(node)
        theta_y[node] = th
        a = s * nF + li
        b = s * nF + lj
        r = row0 + np.arange(li.size)
        rows += [r, r]
        cols += [a, b]
        vals += [np.full(li.size, -1.0 / h), np.exp(1j * th) / h]
        wts.append(hx * h * h * 0.5 * (rho[li] + rho[lj]))
        row0 += li.size
        diag[s * nF:(s + 1) * nF] = hx * rho * lat.bdiag
        mass[s * nF:(s + 1) * nF] = hx * h * h * rho * ell[node] ** 2

    need_w = np.any(dell != 0) or np.any(dphi != 0)
    if need_w and wrap:
        theta_y[N] = ylink_phases(N)
    # neighbour tables for central differences in the fibre
    nb = {}
    for d in (0, 1):
        for sgn in (1, -1):
            off = np.zeros(2, int)
            off[d] = sgn
            nb[(d, sgn)] = lat.node_at(lat.ab[:, 0] + off[0], lat.ab[:, 1] + off[1])
    # link index lookup: phase of the step f -> nb[(d, sgn)][f]
    link_of = {}
    for d in (0, 1):
        sel = lat.dirs == d
        fwd = -np.ones(nF, int)
        fwd[li[sel]] = np.nonzero(sel)[0]
        link_of[d] = fwd

    def step_phase(th, d, sgn, f):
        """Phase of the fibre step from node f in direction sgn*e_d (0 where the neighbour is missing)."""
        if sgn == 1:
            k = link_of[d][f]
            return np.where(k >= 0, th[np.maximum(k, 0)], 0.0)
        g = nb[(d, -1)][f]
        k = np.where(g >= 0, link_of[d][np.maximum(g, 0)], -1)
        return np.where(k >= 0, -th[np.maximum(k, 0)], 0.0)

    fidx = np.arange(nF)
    for i in range(N):
        a = gidx(i, fidx)
        b = gidx(i + 1, fidx)
        if np.all(a < 0) and np.all(b < 0):
            continue
        cpos, cvel, normals = frame.interval_frame(i, GAUSS_S)
        (E1, dE1), (E2, dE2) = normals
        xs = x[i] + hx * GAUSS_S
        lg = fiber.scale_values(xs)
        dlg = fiber.scale_values(xs, 1) * hx
        pg = twist_fn(xs)
        dpg = dtwist_fn(xs) * hx
        Rg = rotation(pg)  # (g, 2, 2)
        dRg = dpg[:, None, None] * np.einsum("gab,bc->gac", Rg, np.array([[0.0, -1.0], [1.0, 0.0]]))
        ry = np.einsum("gab,nb->nga", Rg, y)
        dry = np.einsum("gab,nb->nga", dRg, y)
        E = np.stack([E1, E2], axis=2)  # (g, 3, 2)
        dE = np.stack([dE1, dE2], axis=2)
        off = np.einsum("gca,nga->ngc", E, ry)
        doff = np.einsum("gca,nga->ngc", dE, ry) + np.einsum("gca,nga->ngc", E, dry)
        pos = cpos[None] + eps * lg[None, :, None] * off
        vel = cvel[None] + eps * (dlg[None, :, None] * off + lg[None, :, None] * doff)
        thx = _line_integrals(A, pos, vel, fac)
        xm = x[i] + 0.5 * hx
        lm = float(fiber.scale_values(xm))
        rho_i = rho_at(ell[i], rotation(phi[i]), frame.kappa[i], y)
        rho_j = rho_at(ell[i + 1], rotation(phi[i + 1]), frame.kappa[i + 1], y)
        rho_m = 0.5 * (rho_i + rho_j)
        wx = h * h * hx * eps**2 * lm**2 / rho_m
        r = row0 + fidx
        rows += [r, r]
        cols += [a, b]
        vals += [np.full(nF, -1.0 / hx), np.exp(1j * thx) / hx]
        if need_w:
            # - w . D_y psi, averaged over both slices (slice i+1 transported back along the x-link)
            wl = float(fiber.scale_values(xm, 1)) / lm
            wp = float(dtwist_fn(np.array([xm]))[0])
            wvec = wl * y + wp * np.stack([-y[:, 1], y[:, 0]], axis=1)
            for node, base, pre in ((i, a, 1.0 + 0j), (i + 1, b, np.exp(1j * thx))):
                th = theta_y.get(node)
                if th is None:
                    continue  # Dirichlet end slice: psi = 0 there
                for d in (0, 1):
                    for sgn in (1, -1):
                        g = nb[(d, sgn)]
                        ok = g >= 0
                        coef = -0.5 * wvec[:, d] * sgn / (2 * h) * pre * np.exp(1j * step_phase(th, d, sgn, fidx))
                        tgt = gidx(node, np.where(ok, g, -1))
                        rows.append(r[ok])
                        cols.append(tgt[ok])
                        vals.append(coef[ok])
        wts.append(wx)
        row0 += nF
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    keep = cols >= 0
    K = _form(rows[keep], cols[keep], vals[keep], np.concatenate(wts), row0, n) + sp.diags(diag)
    K = _hermitian(K)
    dsc = 1.0 / np.sqrt(mass)
    H = _hermitian(sp.diags(dsc) @ K @ sp.diags(dsc))
    if lambda0 is None:
        lam_unit = float(lowest_eigenpairs(lat.operator(), 1, sigma=0.0 if nF > 2048 else None,
                                           vectors=False).eigenvalues[0])
        lambda0 = lam_unit / float(np.max(fiber.scale_values(x))) ** 2
    return FullOperatorAssembly(H, K, mass, "massive", x, slices, nF, sigma, eps,
                                "periodic" if wrap else "dirichlet", lambda0,
                                info={"h_F": h, "lattice": lat, "seam_quarter_turns": int(np.rint(
                                    ((frame.holonomy_angle or 0.0) + phi[N] - phi[0]) / (0.5 * np.pi))) if frame.closed else 0,
                                      "extra_twist": extra_twist, "scale": ell})


# --- solving ----------------------------------------------------------------

def _block_diagonal(H, ns, nf):
    """Per-slice diagonal blocks of H as one block-diagonal sparse matrix."""
    H = H.tocoo()
    keep = (H.row // nf) == (H.col // nf)
    return sp.csr_matrix((H.data[keep], (H.row[keep], H.col[keep])), shape=H.shape)


def _gershgorin_slice_bounds(Bd, ns, nf):
    Bd = Bd.tocsr()
    d = Bd.diagonal().real
    r = np.asarray(abs(Bd).sum(axis=1)).ravel() - np.abs(d)
    return (d - r).reshape(ns, nf).min(axis=1)


def _slice_ground_modes(Bd_lu, ns, nf, dtype, iters=40):
    v = np.ones(ns * nf, dtype=dtype)
    for _ in range(iters):
        v = Bd_lu.solve(v)
        v = v.reshape(ns, nf)
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
        v = v.ravel()
    return v.reshape(ns, nf)


def _coarse_basis(modes):
    ns, nf = modes.shape
    rows = np.arange(ns * nf)
    cols = np.repeat(np.arange(ns), nf)
    return sp.csr_matrix((modes.ravel(), (rows, cols)), shape=(ns * nf, ns))


def coarse_estimate(asm, k, modes=None):
    """Galerkin eigenvalues of H on the span of per-slice fibre ground modes (upper bounds)."""
    H = asm.matrix
    ns, nf = asm.slices.size, asm.n_fiber
    if modes is None:
        Bd = _block_diagonal(H, ns, nf)
        low = _gershgorin_slice_bounds(Bd, ns, nf) - 1e-9
        lu = spla.splu((Bd - sp.diags(np.repeat(low, nf))).tocsc())
        modes = _slice_ground_modes(lu, ns, nf, H.dtype)
    Z = _coarse_basis(modes)
    Hc = (Z.conj().T @ H @ Z).toarray()
    Hc = 0.5 * (Hc + Hc.conj().T)
    w = np.linalg.eigvalsh(Hc)
    return w[:k], modes


class _TwoLevel:
    def __init__(self, Bd_lu):
        self.lu = Bd_lu

    def __call__(self, r):
        return self.lu.solve(r)


def full_spectrum(asm, k=6, solver_tol=1e-9, margin=None, method=None, max_tries=6):
    """Lowest k eigenvalues (raw) of an assembled full operator via shift-invert Lanczos.

    The shift starts below the coarse (adiabatic-subspace) estimate of the
    ground energy and is lowered whenever CG meets negative curvature.
    """
    H = asm.matrix
    n = H.shape[0]
    ns, nf = asm.slices.size, asm.n_fiber
    if method is None:
        method = "lu" if asm.kind == "hollow" or n <= 60_000 else "pcg"
    kk = min(n - 1, k + 4)
    est, modes = coarse_estimate(asm, min(kk, ns))
    if margin is None:
        margin = max(asm.epsilon**2, 0.05 * (est[-1] - est[0]))
    sigma = float(est[0]) - margin
    inner = None
    for attempt in range(max_tries):
        try:
            if method == "lu":
                inv = ShiftInvert(H, sigma, "lu")
            else:
                Ashift = (H - sigma * sp.identity(n, format="csr")).tocsr()
                Bd = _block_diagonal(Ashift, ns, nf)
                lu = spla.splu(Bd.tocsc())
                Z = _coarse_basis(modes)
                Ac = (Z.conj().T @ Ashift @ Z).toarray()
                Ac = 0.5 * (Ac + Ac.conj().T)
                clu = _DenseLU(Ac)
                inv = ShiftInvert(H, sigma, "pcg", preconditioner=lu.solve, coarse=(Z, clu), tol=1e-11)
            res = lowest_eigenpairs(H, kk, solver_tol=solver_tol, sigma=sigma, inverse=inv, vectors=False)
            if res.eigenvalues[0] < sigma - 1e-12 * max(1.0, abs(sigma)):
                raise ShiftSingular("eigenvalue found below the shift")
            inner = getattr(inv, "iterations", None)
            break
        except ShiftSingular:
            sigma -= 2.0 * margin * (attempt + 1)
    else:
        raise NotConverged(f"no admissible shift after {max_tries} attempts")
    w = res.eigenvalues[:k]
    stats = dict(res.stats)
    stats["sigma"] = sigma
    if inner:
        stats["inner_iterations_mean"] = float(np.mean(inner))
    return w, stats


class _DenseLU:
    def __init__(self, A):
        import scipy.linalg as sla

        self.f = sla.lu_factor(A)

    def solve(self, b):
        import scipy.linalg as sla

        return sla.lu_solve(self.f, b)


# --- spectral comparison ----------------------------------------------------

def spectral_distance(spec_a, spec_b, window):
    """(Hausdorff-type distance on the window, max pairwise gap of matched low eigenvalues).

    Each windowed eigenvalue of one list is matched to the nearest eigenvalue
    of the whole other list, so a level sitting just across the window edge
    does not register as a missing eigenvalue.
    """
    lo, hi = window
    a = np.sort(np.asarray(spec_a, float))
    b = np.sort(np.asarray(spec_b, float))
    wa = a[(a >= lo) & (a <= hi)]
    wb = b[(b >= lo) & (b <= hi)]
    if wa.size == 0 and wb.size == 0:
        raise EmptyWindow(f"no eigenvalues in [{lo}, {hi}]")
    if a.size == 0 or b.size == 0:
        return np.inf, np.inf
    da = np.abs(wa[:, None] - b[None, :]).min(axis=1).max() if wa.size else 0.0
    db = np.abs(wb[:, None] - a[None, :]).min(axis=1).max() if wb.size else 0.0
    haus = float(max(da, db))
    m = min(max(wa.size, wb.size), a.size, b.size)
    pair = float(np.max(np.abs(a[:m] - b[:m])))
    return haus, pair


def convergence_fit(pairs):
    """Least-squares fit log d = slope log eps + intercept; returns (slope, intercept, residual)."""
    arr = np.asarray(pairs, float)
    eps, d = arr[:, 0], arr[:, 1]
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise NonPositiveDistance("distances must be positive and finite")
    if np.unique(eps).size < 2:
        raise ValueError("need at least two distinct eps values")
    X = np.column_stack([np.log(eps), np.ones_like(eps)])
    coef, res, *_ = np.linalg.lstsq(X, np.log(d), rcond=None)
    resid = float(np.sqrt(res[0] / eps.size)) if res.size else 0.0
    return float(coef[0]), float(coef[1]), resid
