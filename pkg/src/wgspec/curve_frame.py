"""Arc-length curves in R^3 and their parallel (Bishop) frames."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import BPoly

from .errors import DegenerateNormal, EvaluationDomain, NonUnitSpeed

ANALYTIC_TOL = 1e-10
SAMPLED_TOL = 1e-6


@dataclass(frozen=True)
class CurveModel:
    """Unit-speed curve x -> c(x) with first and second derivatives.

    ``evaluator`` maps an array of arc lengths (n,) to three (n, 3) arrays.
    Closed curves live on [-L, L] with the two ends identified.
    """

    kind: str
    x_min: float
    x_max: float
    evaluator: Callable = field(repr=False)
    closed: bool = False
    tol: float = ANALYTIC_TOL
    params: dict = field(default_factory=dict)

    @property
    def half_length(self):
        return 0.5 * (self.x_max - self.x_min)

    def eval(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.closed:
            period = self.x_max - self.x_min
            x = self.x_min + np.mod(x - self.x_min, period)
        else:
            slack = 1e-9 * max(1.0, self.x_max - self.x_min)
            if np.any(x < self.x_min - slack) or np.any(x > self.x_max + slack):
                raise EvaluationDomain(f"x outside [{self.x_min}, {self.x_max}] for {self.kind}")
        c, d1, d2 = self.evaluator(x)
        return np.asarray(c, float), np.asarray(d1, float), np.asarray(d2, float)

    def check_unit_speed(self, x):
        _, d1, d2 = self.eval(x)
        speed_err = np.max(np.abs(np.linalg.norm(d1, axis=1) - 1.0))
        orth_err = np.max(np.abs(np.einsum("ij,ij->i", d1, d2)))
        if speed_err > self.tol or orth_err > self.tol * max(1.0, np.max(np.linalg.norm(d2, axis=1))):
            raise NonUnitSpeed(f"{self.kind}: |c'|-1 up to {speed_err:.2e}, c'.c'' up to {orth_err:.2e}")


def line(x_min=-1.0, x_max=1.0, direction=(0.0, 0.0, 1.0), origin=(0.0, 0.0, 0.0)):
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    o = np.asarray(origin, float)

    def ev(x):
        c = o[None, :] + x[:, None] * d[None, :]
        return c, np.tile(d, (x.size, 1)), np.zeros((x.size, 3))

    return CurveModel("line", float(x_min), float(x_max), ev, params={"direction": d.tolist()})


def circle(radius=1.0):
    R = float(radius)

    def ev(x):
        t = x / R
        c = np.stack([R * np.cos(t), R * np.sin(t), np.zeros_like(t)], axis=1)
        d1 = np.stack([-np.sin(t), np.cos(t), np.zeros_like(t)], axis=1)
        d2 = np.stack([-np.cos(t), -np.sin(t), np.zeros_like(t)], axis=1) / R
        return c, d1, d2

    return CurveModel("circle", -np.pi * R, np.pi * R, ev, closed=True, params={"R": R})


def helix(a=1.0, b=1.0, x_min=-5.0, x_max=5.0):
    a, b = float(a), float(b)
    w = 1.0 / np.hypot(a, b)

    def ev(x):
        t = w * x
        c = np.stack([a * np.cos(t), a * np.sin(t), b * t], axis=1)
        d1 = w * np.stack([-a * np.sin(t), a * np.cos(t), np.full_like(t, b)], axis=1)
        d2 = w * w * np.stack([-a * np.cos(t), -a * np.sin(t), np.zeros_like(t)], axis=1)
        return c, d1, d2

    return CurveModel("helix", float(x_min), float(x_max), ev, params={"a": a, "b": b})


def _hermite_table(xs, c, d1, d2):
    """Quintic Hermite interpolant through values, slopes and second derivatives."""
    y = np.stack([c, d1, d2], axis=1)  # (n, 3 derivs, 3 comps)
    return [BPoly.from_derivatives(xs, y[:, :, k]) for k in range(3)]


def _hermite_eval(polys, x):
    out = []
    for nu in range(3):
        out.append(np.stack([p(x, nu) if nu else p(x) for p in polys], axis=1))
    return tuple(out)


def bump_curve(kappa0=0.5, width=1.0, x_min=-10.0, x_max=10.0, table_step=0.02):
    """Planar curve in the (p1, p3) plane with curvature kappa0 sech^2(x/width).

    Tangent angle theta(x) = kappa0*width*tanh(x/width); position by composite
    Gauss quadrature of the tangent, then quintic Hermite interpolation.
    """
    k0, w = float(kappa0), float(width)

    def tangent(x):
        th = k0 * w * np.tanh(x / w)
        dth = k0 / np.cosh(x / w) ** 2
        d1 = np.stack([np.sin(th), np.zeros_like(th), np.cos(th)], axis=1)
        d2 = dth[:, None] * np.stack([np.cos(th), np.zeros_like(th), -np.sin(th)], axis=1)
        return d1, d2

    n = max(int(np.ceil((x_max - x_min) / table_step)), 8)
    xs = np.linspace(x_min, x_max, n + 1)
    gx, gw = np.polynomial.legendre.leggauss(8)
    h = xs[1] - xs[0]
    pts = (xs[:-1, None] + 0.5 * h * (gx[None, :] + 1.0)).ravel()
    t_pts, _ = tangent(pts)
    incr = 0.5 * h * np.einsum("k,ikc->ic", gw, t_pts.reshape(n, gx.size, 3))
    c = np.vstack([np.zeros(3), np.cumsum(incr, axis=0)])
    # anchor c(0) = 0 when 0 lies in the range
    if x_min <= 0.0 <= x_max:
        d1_0, d2_0 = tangent(xs)
        polys = _hermite_table(xs, c, d1_0, d2_0)
        c = c - _hermite_eval(polys, np.array([0.0]))[0][0]
    d1s, d2s = tangent(xs)
    polys = _hermite_table(xs, c, d1s, d2s)

    def ev(x):
        d1, d2 = tangent(x)
        return _hermite_eval(polys, x)[0], d1, d2

    return CurveModel("bump_curve", float(x_min), float(x_max), ev,
                      params={"kappa0": k0, "width": w})


def _fd4(values, h, periodic):
    """First derivative, 4th order, along axis 0."""
    v = np.asarray(values, float)
    if periodic:
        return (np.roll(v, 2, 0) - 8 * np.roll(v, 1, 0) + 8 * np.roll(v, -1, 0) - np.roll(v, -2, 0)) / (12 * h)
    d = np.empty_like(v)
    d[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    a = np.array([-25, 48, -36, 16, -3]) / (12 * h)
    b = np.array([-3, -10, 18, -6, 1]) / (12 * h)
    d[0] = np.tensordot(a, v[:5], 1)
    d[1] = np.tensordot(b, v[:5], 1)
    d[-1] = -np.tensordot(a, v[::-1][:5], 1)
    d[-2] = -np.tensordot(b, v[::-1][:5], 1)
    return d


def sampled_curve(xs, points, closed=False):
    """Curve from samples c(x_i) on a uniform arc-length grid.

    For closed curves the samples cover [-L, L] with the last row repeating
    the first.
    """
    xs = np.asarray(xs, float)
    pts = np.asarray(points, float)
    h = xs[1] - xs[0]
    if not np.allclose(np.diff(xs), h, rtol=1e-8, atol=1e-12):
        raise NonUnitSpeed("sampled curve needs a uniform x grid")
    if closed:
        core = pts[:-1]
        d1 = _fd4(core, h, True)
        d2 = _fd4(d1, h, True)
        d1 = np.vstack([d1, d1[:1]])
        d2 = np.vstack([d2, d2[:1]])
    else:
        d1 = _fd4(pts, h, False)
        d2 = _fd4(d1, h, False)
    polys = _hermite_table(xs, pts, d1, d2)

    def ev(x):
        return _hermite_eval(polys, x)

    return CurveModel("sampled", float(xs[0]), float(xs[-1]), ev, closed=closed, tol=SAMPLED_TOL)


def load_sampled_curve(path, closed=False):
    data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    return sampled_curve(data[:, 0], data[:, 1:4], closed=closed)


@dataclass(frozen=True)
class FrameField:
    grid: np.ndarray
    tau: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    curve: CurveModel = field(repr=False)
    holonomy_angle: Optional[float] = None

    @property
    def closed(self):
        return self.curve.closed

    @property
    def step(self):
        return self.grid[1] - self.grid[0]

    @property
    def kappa(self):
        return np.stack([self.kappa1, self.kappa2], axis=1)

    def kappa_derivatives(self):
        """(kappa', kappa'') on the grid by second-order differences."""
        h = self.step
        k = self.kappa
        if self.closed:
            core = k[:-1]
            d1 = (np.roll(core, -1, 0) - np.roll(core, 1, 0)) / (2 * h)
            d2 = (np.roll(core, -1, 0) - 2 * core + np.roll(core, 1, 0)) / h**2
            # the seam value is the rotated image of the first node; derivatives of
            # kappa there follow the same rotation
            rot = _rot2(self.holonomy_angle or 0.0)
            return np.vstack([d1, d1[:1] @ rot.T]), np.vstack([d2, d2[:1] @ rot.T])
        d1 = np.gradient(k, h, axis=0, edge_order=2)
        d2 = np.gradient(d1, h, axis=0, edge_order=2)
        return d1, d2

    def interval_frame(self, i, s):
        """Position, tangent and normals inside [x_i, x_{i+1}] at fractions s.

        Normals use the cubic Hermite interpolant with node slopes -kappa_j tau,
        and come with their own s-derivatives so line integrals along the
        interpolated path are consistent.
        """
        h = self.step
        s = np.asarray(s, float)
        x = self.grid[i] + h * s
        c, d1, _ = self.curve.eval(x)
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        g00 = 6 * s**2 - 6 * s
        g10 = 3 * s**2 - 4 * s + 1
        g01 = -6 * s**2 + 6 * s
        g11 = 3 * s**2 - 2 * s
        out = []
        for e, k in ((self.e1, self.kappa1), (self.e2, self.kappa2)):
            m0 = -k[i] * self.tau[i]
            m1 = -k[i + 1] * self.tau[i + 1]
            val = h00[:, None] * e[i] + h10[:, None] * h * m0 + h01[:, None] * e[i + 1] + h11[:, None] * h * m1
            der = g00[:, None] * e[i] + g10[:, None] * h * m0 + g01[:, None] * e[i + 1] + g11[:, None] * h * m1
            out.append((val, der))  # der is d/ds
        return c, d1 * h, out


def _rot2(a):
    return np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])


def default_initial_normal(tau0):
    axis = np.zeros(3)
    axis[np.argmin(np.abs(tau0))] = 1.0
    return axis


def build_parallel_frame(curve, n_points, initial_normal=None):
    """Parallel-transported orthonormal frame on n_points uniform nodes.

    RK4 on de_j/dx = -(c''.e_j) c'.  After each step the normals are projected
    off the exact tangent and orthonormalised symmetrically (Lowdin), which
    keeps the result equivariant under rotations of the initial normal.
    """
    if n_points < 16:
        raise ValueError("n_points must be at least 16")
    xs = np.linspace(curve.x_min, curve.x_max, n_points)
    h = xs[1] - xs[0]
    curve.check_unit_speed(xs)
    mid = xs[:-1] + 0.5 * h
    _, t_node, a_node = curve.eval(xs)
    _, t_mid, a_mid = curve.eval(mid)

    tau0 = t_node[0]
    n0 = default_initial_normal(tau0) if initial_normal is None else np.asarray(initial_normal, float)
    nrm = np.linalg.norm(n0)
    if nrm == 0:
        raise DegenerateNormal("initial normal is zero")
    n0 = n0 / nrm
    n0 = n0 - (n0 @ tau0) * tau0
    if np.linalg.norm(n0) < 1e-8:
        raise DegenerateNormal("initial normal is parallel to the tangent")
    e1 = n0 / np.linalg.norm(n0)
    e2 = np.cross(tau0, e1)
    E = np.empty((n_points, 3, 2))
    E[0] = np.stack([e1, e2], axis=1)

    def rhs(t, a, Ecur):
        return -np.outer(t, a @ Ecur)

    for i in range(n_points - 1):
        Ei = E[i]
        k1 = rhs(t_node[i], a_node[i], Ei)
        k2 = rhs(t_mid[i], a_mid[i], Ei + 0.5 * h * k1)
        k3 = rhs(t_mid[i], a_mid[i], Ei + 0.5 * h * k2)
        k4 = rhs(t_node[i + 1], a_node[i + 1], Ei + h * k3)
        En = Ei + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t_node[i + 1]
        En = En - np.outer(t, t @ En)
        w, V = np.linalg.eigh(En.T @ En)
        E[i + 1] = En @ (V @ np.diag(w**-0.5) @ V.T)

    e1s, e2s = E[:, :, 0], E[:, :, 1]
    k1s = np.einsum("ij,ij->i", a_node, e1s)
    k2s = np.einsum("ij,ij->i", a_node, e2s)
    hol = None
    if curve.closed:
        hol = float(np.arctan2(e1s[-1] @ e2s[0], e1s[-1] @ e1s[0]))
    return FrameField(xs, t_node, e1s, e2s, k1s, k2s, curve, hol)


def curvature_norm_sq(frame):
    return frame.kappa1**2 + frame.kappa2**2


def orthonormality_error(frame):
    F = np.stack([frame.tau, frame.e1, frame.e2], axis=2)
    G = np.einsum("nki,nkj->nij", F, F) - np.eye(3)[None]
    return float(np.max(np.linalg.norm(G, axis=(1, 2), ord=2)))


def rotate_normal(frame, index, angle):
    """The normal e1(x_index) rotated by angle towards e2 (for invariance tests)."""
    return np.cos(angle) * frame.e1[index] + np.sin(angle) * frame.e2[index]


def make_curve(spec):
    """Build a curve from a config dict or name string."""
    if isinstance(spec, str):
        spec = {"name": spec}
    spec = dict(spec)
    name = spec.pop("name", spec.pop("kind", None))
    if name == "line":
        return line(**spec)
    if name == "circle":
        return circle(**spec)
    if name == "helix":
        return helix(**spec)
    if name == "bump_curve":
        return bump_curve(**spec)
    if name == "sampled":
        return load_sampled_curve(spec["file"], closed=spec.get("closed", False))
    from .errors import ConfigError

    raise ConfigError(f"unknown curve {name!r}")
