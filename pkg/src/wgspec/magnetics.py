"""Ambient vector potentials, fields along the curve and pulled-back components."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, EvaluationDomain, UnsupportedFiber
from .expressions import Expression

_P = ("p1", "p2", "p3")


@dataclass(frozen=True)
class VectorPotential:
    """Cartesian components of a one-form on R^3, optionally with its curl."""

    potential: Callable = field(repr=False)
    curl_fn: Optional[Callable] = field(default=None, repr=False)
    name: str = "custom"

    def __call__(self, p):
        p = np.atleast_2d(np.asarray(p, float))
        a = np.asarray(self.potential(p), float)
        if not np.all(np.isfinite(a)):
            raise EvaluationDomain(f"potential {self.name} not finite on the requested points")
        return a

    def curl(self, p):
        p = np.atleast_2d(np.asarray(p, float))
        if self.curl_fn is not None:
            return np.asarray(self.curl_fn(p), float)
        return numerical_curl(self, p)


def numerical_curl(A, p, rel_step=1e-5):
    p = np.atleast_2d(np.asarray(p, float))
    h = rel_step * (1.0 + np.linalg.norm(p, axis=1))
    J = np.empty((p.shape[0], 3, 3))  # J[:, i, j] = dA_i/dp_j
    for j in range(3):
        dp = np.zeros_like(p)
        dp[:, j] = h
        J[:, :, j] = (A(p + dp) - A(p - dp)) / (2 * h[:, None])
    return np.stack([J[:, 2, 1] - J[:, 1, 2], J[:, 0, 2] - J[:, 2, 0], J[:, 1, 0] - J[:, 0, 1]], axis=1)


def uniform(B):
    B = np.asarray(B, float)
    return VectorPotential(lambda p: 0.5 * np.cross(B[None, :], p),
                           lambda p: np.tile(B, (p.shape[0], 1)), f"uniform{tuple(B)}")


def axial_gradient(B0, slope):
    """A = 1/2 (B0 + slope p3)(-p2, p1, 0), a divergence-free field with B3 varying along p3."""
    B0, s = float(B0), float(slope)

    def pot(p):
        f = 0.5 * (B0 + s * p[:, 2])
        return np.stack([-f * p[:, 1], f * p[:, 0], np.zeros(p.shape[0])], axis=1)

    def curl(p):
        return np.stack([-0.5 * s * p[:, 0], -0.5 * s * p[:, 1], B0 + s * p[:, 2]], axis=1)

    return VectorPotential(pot, curl, f"axial_gradient({B0},{s})")


def _gradient_of(chi):
    if isinstance(chi, str):
        chi = Expression(chi, _P)
    if isinstance(chi, Expression):
        parts = [chi.diff(v) for v in _P]
        return lambda p: np.stack([g(p[:, 0], p[:, 1], p[:, 2]) for g in parts], axis=1)
    # plain callable on (n,3) arrays: central differences
    def grad(p):
        h = 1e-5 * (1.0 + np.linalg.norm(p, axis=1))
        out = np.empty_like(p)
        for j in range(3):
            dp = np.zeros_like(p)
            dp[:, j] = h
            out[:, j] = (chi(p + dp) - chi(p - dp)) / (2 * h)
        return out
    return grad


def zero_potential():
    return VectorPotential(lambda p: np.zeros_like(p), lambda p: np.zeros_like(p), "zero")


def pure_gauge(chi):
    grad = _gradient_of(chi)
    return VectorPotential(grad, lambda p: np.zeros_like(p), f"pure_gauge({chi})")


def gauge_transform(A, chi):
    """A + d(chi).  The curl (if analytic) is unchanged."""
    grad = _gradient_of(chi)
    return VectorPotential(lambda p: A(p) + grad(p), A.curl_fn, f"{A.name}+d({chi})")


def expression_potential(components):
    exprs = [Expression(c, _P) for c in components]
    curl_parts = [
        (exprs[2].diff("p2"), exprs[1].diff("p3")),
        (exprs[0].diff("p3"), exprs[2].diff("p1")),
        (exprs[1].diff("p1"), exprs[0].diff("p2")),
    ]

    def pot(p):
        return np.stack([e(p[:, 0], p[:, 1], p[:, 2]) for e in exprs], axis=1)

    def curl(p):
        a = [f(p[:, 0], p[:, 1], p[:, 2]) - g(p[:, 0], p[:, 1], p[:, 2]) for f, g in curl_parts]
        return np.stack(a, axis=1)

    return VectorPotential(pot, curl, f"custom{tuple(components)}")


def make_potential(spec):
    """Potential from a config entry, e.g. {"name": "uniform", "B": [0, 0, 1]}."""
    if spec is None:
        return zero_potential()
    spec = dict(spec)
    name = spec.pop("name", spec.pop("kind", None))
    if name == "zero":
        A = zero_potential()
    elif name == "uniform":
        A = uniform(spec["B"])
    elif name == "axial_gradient":
        A = axial_gradient(spec.get("B0", 1.0), spec.get("slope", 0.0))
    elif name == "pure_gauge":
        A = pure_gauge(spec["chi"])
    elif name == "custom":
        A = expression_potential(spec["components"])
    else:
        raise ConfigError(f"unknown potential {name!r}")
    if "gauge" in spec:
        A = gauge_transform(A, spec["gauge"])
    return A


@dataclass(frozen=True)
class FieldOnCurve:
    grid: np.ndarray
    Bpar: np.ndarray
    Bperp1: np.ndarray
    Bperp2: np.ndarray
    AB: np.ndarray

    @property
    def Bperp(self):
        return np.stack([self.Bperp1, self.Bperp2], axis=1)


def field_on_curve(A, frame):
    c, _, _ = frame.curve.eval(frame.grid)
    B = A.curl(c)
    a = A(c)
    return FieldOnCurve(
        frame.grid,
        np.einsum("ij,ij->i", B, frame.tau),
        np.einsum("ij,ij->i", B, frame.e1),
        np.einsum("ij,ij->i", B, frame.e2),
        np.einsum("ij,ij->i", a, frame.tau),
    )


def rotation(phi):
    """Stack of 2x2 rotation matrices for angles phi (any shape)."""
    phi = np.asarray(phi, float)
    c, s = np.cos(phi), np.sin(phi)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def cross2(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(frozen=True)
class PullbackPotential:
    """Leading coefficients of the pulled-back potential in the convenient gauge.

    horizontal(y)[i] gives A_H(d_x^H) at base node i; vertical(y)[i] gives the
    fibre one-form A_V (a 2-vector for massive fibres, the dy-coefficient for
    the hollow circle).
    """

    kind: str
    grid: np.ndarray
    AB: np.ndarray
    Bpar: np.ndarray
    Bperp: np.ndarray
    scale: np.ndarray
    twist: np.ndarray

    def horizontal(self, y):
        y = np.asarray(y, float)
        if self.kind == "hollow":
            pos = np.stack([np.cos(y), np.sin(y)], -1)
            return self.scale[:, None] * cross2(self.Bperp[:, None, :], pos[None])
        ry = np.einsum("iab,nb->ina", rotation(self.twist), np.atleast_2d(y))
        return self.scale[:, None] * cross2(self.Bperp[:, None, :], ry)

    def vertical(self, y):
        if self.kind == "hollow":
            return 0.5 * self.Bpar * self.scale**2
        y = np.atleast_2d(np.asarray(y, float))
        f = 0.5 * (self.Bpar * self.scale**2)[:, None]
        return np.stack([-f * y[None, :, 1], f * y[None, :, 0]], -1)


def pullback_components(A, frame, fiber):
    foc = field_on_curve(A, frame)
    kind = getattr(fiber, "kind", None)
    if kind == "hollow_circle":
        k = "hollow"
        twist = np.zeros_like(frame.grid)
    elif kind in ("massive_disk", "massive_grid"):
        k = "massive"
        twist = fiber.twist_values(frame.grid)
    else:
        raise UnsupportedFiber(f"no pullback formulas for fibre kind {kind!r}")
    return PullbackPotential(k, frame.grid, foc.AB, foc.Bpar, foc.Bperp,
                             fiber.scale_values(frame.grid), twist)
