"""Fibre (cross-section) eigenproblems, moments and the magnetic correction lambda_{0,2}.

Massive fibres are planar domains discretised on a square lattice through the
origin; the boundary enters through the fraction of each cut link that lies
inside the domain (symmetric, P1-like treatment).  The hollow fibre is the
unit circle with its Fourier data.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.ndimage as ndi
import scipy.sparse as sp

from .eigensolve import ShiftInvert, lowest_eigenpairs, solve_shifted
from .errors import ConfigError, GapTooSmall, MeshTooCoarse, UnsupportedFiber
from .expressions import ScalarFunction, as_scalar_function


# --- Bessel functions -------------------------------------------------------

def bessel_j(n, x, terms=60):
    """J_n(x) from its power series; accurate for |x| up to ~15 in double precision."""
    x = np.asarray(x, float)
    half = 0.5 * x
    term = np.power(half, n) / float(np.prod(np.arange(1, n + 1))) if n > 0 else np.ones_like(x)
    total = term.copy()
    q = -half * half
    for k in range(1, terms):
        term = term * q / (k * (k + n))
        total = total + term
    return total


def bessel_j_prime(n, x):
    if n == 0:
        return -bessel_j(1, x)
    return 0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))


def bessel_zeros(n, count, x_max=14.0):
    """First positive zeros of J_n: sign-change scan, bisection, then Newton polish."""
    xs = np.linspace(1e-3, x_max, 4000)
    vals = bessel_j(n, xs)
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        a, b = xs[i], xs[i + 1]
        fa = bessel_j(n, a)
        for _ in range(40):
            m = 0.5 * (a + b)
            fm = bessel_j(n, m)
            if np.sign(fm) == np.sign(fa):
                a, fa = m, fm
            else:
                b = m
        r = 0.5 * (a + b)
        for _ in range(3):
            r = r - bessel_j(n, r) / bessel_j_prime(n, r)
        roots.append(float(r))
        if len(roots) == count:
            break
    return np.array(roots)


J01 = float(bessel_zeros(0, 1)[0])


# --- masks and lattices -----------------------------------------------------

@dataclass(frozen=True)
class Mask:
    """Planar domain {f < 0} with a bounding box.

    ``symmetry`` is the order of the rotation group about the origin that maps
    the domain to itself (0 for full rotational invariance).
    """

    name: str
    level: Callable = field(repr=False)
    bbox: tuple = (-1.0, 1.0, -1.0, 1.0)
    symmetry: int = 1
    staircase: bool = False

    def inside(self, pts):
        return self.level(np.atleast_2d(pts)) < 0


def disk_mask(radius=1.0, center=(0.0, 0.0)):
    c = np.asarray(center, float)
    r = float(radius)
    sym = 0 if np.allclose(c, 0) else 1
    return Mask(f"disk({r})", lambda p: np.hypot(p[:, 0] - c[0], p[:, 1] - c[1]) - r,
                (c[0] - r, c[0] + r, c[1] - r, c[1] + r), sym)


def square_mask(side=1.0, center=(0.5, 0.5)):
    c = np.asarray(center, float)
    s = 0.5 * float(side)
    sym = 4 if np.allclose(c, 0) else 1
    return Mask(f"square({side})", lambda p: np.maximum(np.abs(p[:, 0] - c[0]), np.abs(p[:, 1] - c[1])) - s,
                (c[0] - s, c[0] + s, c[1] - s, c[1] + s), sym)


def annulus_mask(r_in=0.5, r_out=1.0):
    def f(p):
        r = np.hypot(p[:, 0], p[:, 1])
        return np.maximum(r - r_out, r_in - r)

    return Mask(f"annulus({r_in},{r_out})", f, (-r_out, r_out, -r_out, r_out), 0)


def csv_mask(path, h):
    """0/1 table; entry (row r, col c) sits at ((c - nc//2) h, (r - nr//2) h)."""
    table = np.loadtxt(path, delimiter=",", ndmin=2) > 0.5
    nr, nc = table.shape

    def f(p):
        c = np.rint(p[:, 0] / h).astype(int) + nc // 2
        r = np.rint(p[:, 1] / h).astype(int) + nr // 2
        ok = (c >= 0) & (c < nc) & (r >= 0) & (r < nr)
        out = np.ones(p.shape[0])
        out[ok] = np.where(table[r[ok], c[ok]], -1.0, 1.0)
        return out

    return Mask(f"csv({path})", f, (-(nc // 2) * h, (nc - 1 - nc // 2) * h, -(nr // 2) * h, (nr - 1 - nr // 2) * h),
                1, staircase=True)


def make_mask(spec, h=None):
    if isinstance(spec, Mask):
        return spec
    if isinstance(spec, str):
        spec = {"name": spec}
    spec = dict(spec)
    name = spec.pop("name")
    if name == "disk":
        return disk_mask(**spec)
    if name == "square":
        return square_mask(**spec)
    if name == "annulus":
        return annulus_mask(**spec)
    if name.endswith(".csv"):
        return csv_mask(name, h)
    raise ConfigError(f"unknown mask {name!r}")


def _crossing_fraction(level, p_in, p_out, iters=50):
    """Fraction t in (0, 1] of the segment p_in -> p_out where the level set crosses zero."""
    lo = np.zeros(p_in.shape[0])
    hi = np.ones(p_in.shape[0])
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = level(p_in + mid[:, None] * (p_out - p_in)) < 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


T_MIN = 1e-3


@dataclass(frozen=True, eq=False)
class FiberLattice:
    """Interior lattice nodes of a mask with their links.

    links[k] = (i, j) joins node i to node i + h e_{dirs[k]}; ``bdiag`` holds,
    per node, the sum of 1/t over links cut by the boundary.
    """

    h: float
    mask: Mask
    ab: np.ndarray
    points: np.ndarray
    links: np.ndarray
    dirs: np.ndarray
    bdiag: np.ndarray
    index: np.ndarray = field(repr=False)
    offset: tuple = (0, 0)

    @property
    def n(self):
        return self.points.shape[0]

    def node_at(self, a, b):
        """Node index for lattice coordinates (a, b), or -1."""
        a = np.asarray(a) - self.offset[0]
        b = np.asarray(b) - self.offset[1]
        ok = (a >= 0) & (a < self.index.shape[0]) & (b >= 0) & (b < self.index.shape[1])
        out = np.full(np.shape(a), -1)
        out[ok] = self.index[a[ok], b[ok]]
        return out

    def operator(self, theta=None, link_weight=None, diag_weight=None):
        """(1/h^2) times the weighted Peierls graph Laplacian with cut-link diagonal."""
        w = np.ones(len(self.links)) if link_weight is None else link_weight
        i, j = self.links[:, 0], self.links[:, 1]
        off = -w if theta is None else -w * np.exp(1j * theta)
        deg = np.bincount(i, w, self.n) + np.bincount(j, w, self.n)
        deg = deg + (self.bdiag if diag_weight is None else diag_weight)
        rows = np.concatenate([i, j, np.arange(self.n)])
        cols = np.concatenate([j, i, np.arange(self.n)])
        vals = np.concatenate([off, np.conj(off), deg])
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n)) / self.h**2

    @cached_property
    def angular_momentum(self):
        """Central-difference L = y1 d/dy2 - y2 d/dy1 (exactly antisymmetric)."""
        i, j = self.links[:, 0], self.links[:, 1]
        y = self.points
        # link along e2: coefficient y1/(2h); along e1: -y2/(2h); both constant along the link
        coef = np.where(self.dirs == 1, y[i, 0], -y[i, 1]) / (2 * self.h)
        rows = np.concatenate([i, j])
        cols = np.concatenate([j, i])
        return sp.csr_matrix((np.concatenate([coef, -coef]), (rows, cols)), shape=(self.n, self.n))

    def symmetric_gauge_phases(self):
        """Link phases of A = 1/2 (-y2, y1) (unit field): exactly 1/2 y_a x y_b."""
        ya = self.points[self.links[:, 0]]
        yb = self.points[self.links[:, 1]]
        return 0.5 * (ya[:, 0] * yb[:, 1] - ya[:, 1] * yb[:, 0])


def build_lattice(mask, h, min_nodes=100):
    x0, x1, y0, y1 = mask.bbox
    a0, a1 = int(np.floor(x0 / h)) - 1, int(np.ceil(x1 / h)) + 1
    b0, b1 = int(np.floor(y0 / h)) - 1, int(np.ceil(y1 / h)) + 1
    A, B = np.meshgrid(np.arange(a0, a1 + 1), np.arange(b0, b1 + 1), indexing="ij")
    P = np.stack([A.ravel() * h, B.ravel() * h], axis=1)
    inside = mask.inside(P).reshape(A.shape)
    n = int(inside.sum())
    if n < min_nodes:
        raise MeshTooCoarse(f"only {n} interior nodes for {mask.name} at h={h}")
    labels, ncomp = ndi.label(inside)
    if ncomp != 1:
        raise ConfigError(f"mask {mask.name} is not connected on the lattice ({ncomp} components)")
    index = np.full(A.shape, -1)
    index[inside] = np.arange(n)
    ab = np.stack([A[inside], B[inside]], axis=1)
    pts = ab * h
    links, dirs = [], []
    bdiag = np.zeros(n)
    for d, (da, db) in enumerate(((1, 0), (0, 1))):
        for sgn in (1, -1):
            sa, sb = sgn * da, sgn * db
            # neighbour of (a, b) at (a + sa, b + sb); the box has a one-node margin
            nb = np.roll(inside, (-sa, -sb), axis=(0, 1))
            src = inside
            if sgn == 1:
                both = src & nb
                ii = index[both]
                jj = np.roll(index, (-sa, -sb), axis=(0, 1))[both]
                links.append(np.stack([ii, jj], axis=1))
                dirs.append(np.full(ii.size, d))
            cut = src & ~nb
            ii = index[cut]
            p_in = pts[ii]
            p_out = p_in + h * np.array([sa, sb], float)
            if mask.staircase:
                t = np.ones(ii.size)
            else:
                t = np.maximum(_crossing_fraction(mask.level, p_in, p_out), T_MIN)
            np.add.at(bdiag, ii, 1.0 / t)
    return FiberLattice(h, mask, ab, pts, np.concatenate(links), np.concatenate(dirs), bdiag, index, (a0, b0))


# --- fibre description ------------------------------------------------------

@dataclass(frozen=True)
class FiberSpec:
    """Cross-section geometry: kind, shape and the scale/twist functions of x."""

    kind: str
    radius: float = 1.0
    mask: Optional[Mask] = None
    h: Optional[float] = None
    scale: ScalarFunction = field(default_factory=lambda: ScalarFunction.constant(1.0))
    twist: Optional[ScalarFunction] = None
    n_modes: int = 4

    def __post_init__(self):
        if self.kind not in ("massive_disk", "massive_grid", "hollow_circle"):
            raise UnsupportedFiber(f"unknown fibre kind {self.kind!r}")
        if self.kind == "hollow_circle" and self.twist is not None:
            raise UnsupportedFiber("twist is meaningless for the hollow circle")

    @property
    def massive(self):
        return self.kind != "hollow_circle"

    def scale_values(self, x, derivative=0):
        return np.broadcast_to(self.scale(np.asarray(x, float), derivative), np.shape(x)).astype(float)

    def twist_values(self, x, derivative=0):
        if self.twist is None:
            return np.zeros(np.shape(x))
        return np.broadcast_to(self.twist(np.asarray(x, float), derivative), np.shape(x)).astype(float)

    @property
    def rigid(self):
        return self.scale.is_constant

    def fiber_mask(self):
        if self.kind == "massive_disk":
            return disk_mask(self.radius)
        return self.mask

    def scale_bounds(self, x):
        v = self.scale_values(x)
        return float(v.min()), float(v.max())


def make_fiber(spec):
    spec = dict(spec)
    kind = spec.pop("kind")
    scale = as_scalar_function(spec.pop("scale", 1.0))
    twist = as_scalar_function(spec.pop("twist", None))
    n_modes = spec.pop("n_modes", 4)
    if kind in ("disk", "massive_disk"):
        return FiberSpec("massive_disk", radius=float(spec.get("radius", 1.0)), scale=scale, twist=twist,
                         h=spec.get("h"), n_modes=n_modes)
    if kind in ("grid", "massive_grid"):
        h = float(spec["h"])
        mask = make_mask(spec["mask"], h)
        return FiberSpec("massive_grid", mask=mask, h=h, scale=scale, twist=twist, n_modes=n_modes)
    if kind in ("circle", "hollow_circle"):
        return FiberSpec("hollow_circle", scale=scale, twist=twist, n_modes=n_modes)
    raise ConfigError(f"unknown fibre kind {kind!r}")


# --- vertical spectra -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VerticalSpectrum:
    """Unit-scale fibre eigendata and ground-state moments.

    ``second_moment`` is <y y^T>, ``yL`` the vector <Phi, y_a L Phi> and
    ``LyL`` the vector <L Phi, y_a L Phi>; they feed the twisted-tube
    potentials.  ``lambda02_coeffs`` = (c_par, c_perp) with
    lambda02 = c_par B_par^2 at unit scale; c_perp is the direction-averaged
    coefficient of |B_perp|^2 in ||(B_perp x y) Phi||^2 - (B_perp x <y>)^2.
    """

    kind: str
    eigenvalues: np.ndarray
    ground_state: object
    mean_y: np.ndarray
    mean_ysq: float
    Lnorm_sq: float
    second_moment: np.ndarray
    mean_L: float = 0.0
    yL: np.ndarray = field(default_factory=lambda: np.zeros(2))
    LyL: np.ndarray = field(default_factory=lambda: np.zeros(2))
    lambda02_coeffs: tuple = (0.0, 0.0)
    lattice: Optional[FiberLattice] = None
    eigenvectors: Optional[np.ndarray] = None

    @property
    def lambda0(self):
        return float(self.eigenvalues[0])

    @property
    def gap(self):
        return float(self.eigenvalues[1] - self.eigenvalues[0])

    @property
    def hollow(self):
        return self.kind == "hollow_circle"


def solve_vertical_disk(radius=1.0):
    r = float(radius)
    j0 = bessel_zeros(0, 2)
    j1 = bessel_zeros(1, 1)
    j2 = bessel_zeros(2, 1)
    ev = np.sort(np.array([j0[0], j1[0], j1[0], j2[0], j2[0], j0[1]]) ** 2) / r**2
    j = j0[0]
    norm = 1.0 / (np.sqrt(np.pi) * r * abs(bessel_j(1, j)))

    def phi0(y):
        y = np.atleast_2d(y)
        rho = np.hypot(y[:, 0], y[:, 1])
        return np.where(rho < r, norm * bessel_j(0, j * rho / r), 0.0)

    msq = (j * j - 2.0) / (3.0 * j * j) * r * r
    S = 0.5 * msq * np.eye(2)
    return VerticalSpectrum("massive_disk", ev, phi0, np.zeros(2), float(msq), 0.0, S,
                            lambda02_coeffs=(0.25 * msq, 0.5 * msq))


def solve_vertical_circle():
    ev = np.array([0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0])
    phi0 = lambda y: np.full(np.shape(y), 1.0 / np.sqrt(2 * np.pi))
    # moments of (cos y, sin y) against the constant density
    return VerticalSpectrum("hollow_circle", ev, phi0, np.zeros(2), 1.0, 0.0, 0.5 * np.eye(2),
                            lambda02_coeffs=(0.25, 0.5))


def _grid_moments(lat, phi):
    h2 = lat.h**2
    y = lat.points
    rho = phi * phi * h2
    mean_y = rho @ y
    S = (y * rho[:, None]).T @ y
    Lphi = lat.angular_momentum @ phi
    return mean_y, S, Lphi


def solve_vertical_grid(mask, h, n_modes=4, lattice=None, with_lambda02=True):
    """Dirichlet fibre eigenpairs on the lattice of ``mask`` with step ``h``."""
    lat = lattice if lattice is not None else build_lattice(make_mask(mask, h), h)
    H0 = lat.operator()
    k = min(n_modes, lat.n)
    res = lowest_eigenpairs(H0, k, sigma=0.0 if lat.n > 2048 else None, inverse=None)
    phi = np.real(res.eigenvectors[:, 0])
    phi = phi * np.sign(phi.sum())
    phi = phi / np.sqrt(lat.h**2 * phi @ phi)
    mean_y, S, Lphi = _grid_moments(lat, phi)
    h2 = lat.h**2
    spec = VerticalSpectrum(
        "massive_grid", res.eigenvalues, phi, mean_y, float(np.trace(S)), float(h2 * Lphi @ Lphi), S,
        mean_L=float(h2 * phi @ Lphi),
        yL=h2 * (lat.points * (phi * Lphi)[:, None]).sum(0),
        LyL=h2 * (lat.points * (Lphi * Lphi)[:, None]).sum(0),
        lattice=lat, eigenvectors=res.eigenvectors,
    )
    if not with_lambda02:
        return spec
    c_par = grid_lambda02_unit(spec)
    c_perp = 0.5 * (np.trace(S) - mean_y @ mean_y)
    return _replace(spec, lambda02_coeffs=(c_par, float(c_perp)))


def _replace(spec, **kw):
    from dataclasses import replace

    return replace(spec, **kw)


def solve_vertical(fiber):
    if fiber.kind == "hollow_circle":
        return solve_vertical_circle()
    if fiber.kind == "massive_disk" and fiber.h is None:
        return solve_vertical_disk(fiber.radius)
    return solve_vertical_grid(fiber.fiber_mask(), fiber.h, fiber.n_modes)


def grid_lambda02_unit(spec, tol=1e-11):
    """Second-order coefficient of the lattice ground energy in a unit axial field.

    Exact Rayleigh-Schroedinger coefficient of the Peierls operator: with the
    symmetric-gauge link phases theta, H(b) = H0 + b H1 + b^2 H2 + O(b^3) where
    H1 carries -i theta and H2 carries theta^2/2 on the links.
    """
    lat = spec.lattice
    if spec.gap < 1e-8:
        raise GapTooSmall(f"fibre gap {spec.gap:.2e} too small for the resolvent")
    phi = spec.ground_state
    theta = lat.symmetric_gauge_phases()
    i, j = lat.links[:, 0], lat.links[:, 1]
    h2 = lat.h**2
    # <phi, H2 phi> = sum_links theta^2 phi_i phi_j / h^2 (both orientations counted)
    diamag = np.sum(theta**2 * phi[i] * phi[j]) / h2
    # H1 phi = i v with v real; entries H1_ij = -i theta/h^2, H1_ji = +i theta/h^2
    v = (-np.bincount(i, theta * phi[j], lat.n) + np.bincount(j, theta * phi[i], lat.n)) / h2
    # inner products use the lattice weight h^2 consistently with the normalisation
    unit_phi = phi * lat.h
    H0 = lat.operator()
    v_perp = v - unit_phi * (unit_phi @ v)
    if np.linalg.norm(v_perp) <= 1e-14 * max(1.0, np.linalg.norm(v)):
        para = 0.0
    else:
        x = solve_shifted(H0, spec.lambda0, v_perp, deflate=unit_phi, tol=tol)
        para = float(v_perp @ x)
    return float(h2 * (diamag - para))


def lambda02(spec, Bpar, fiber=None, scale=None):
    """Second-order ground-energy correction for the axial field component.

    Hollow circle: exactly 1/4 l^2 B^2.  Massive fibres: l^2 c_par B^2 with
    c_par from the resolvent solve (grid) or the Bessel ground state (disk).
    """
    if spec.gap < 1e-8:
        raise GapTooSmall(f"fibre gap {spec.gap:.2e} too small for the resolvent")
    B = np.asarray(Bpar, float)
    if scale is None:
        scale = 1.0 if fiber is None else float(fiber.scale_values(0.0))
    l2 = np.asarray(scale, float) ** 2
    if spec.hollow:
        return 0.25 * l2 * B * B
    return l2 * spec.lambda02_coeffs[0] * B * B


def magnetic_fiber_ground(lat, b, sigma=None):
    """Lowest eigenvalue of the lattice fibre operator in the symmetric gauge, field b."""
    H = lat.operator(theta=b * lat.symmetric_gauge_phases())
    # the Dirichlet operator is positive, so 0 is a safe shift
    inv = ShiftInvert(H, 0.0 if sigma is None else sigma)
    return float(lowest_eigenpairs(H, 1, inverse=inv, vectors=False).eigenvalues[0])


def lambda02_bruteforce(lat, fields=(0.02, 0.01, 0.005)):
    """Fit lambda0(b) - lambda0(0) = c2 b^2 + c4 b^4 from direct diagonalisation.

    Returns (c2, c4, table of (b, lambda0(b))).
    """
    base = magnetic_fiber_ground(lat, 0.0)
    bs = np.asarray(fields, float)
    vals = np.array([magnetic_fiber_ground(lat, b) for b in bs])
    X = np.stack([bs**2, bs**4], axis=1)
    coef, *_ = np.linalg.lstsq(X, vals - base, rcond=None)
    return float(coef[0]), float(coef[1]), np.column_stack([bs, vals]), base
