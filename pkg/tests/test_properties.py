import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from wgspec.cross_section import make_fiber, solve_vertical, solve_vertical_grid, square_mask, disk_mask
from wgspec.curve_frame import build_parallel_frame, circle, helix, line
from wgspec.effective_ops import assemble, assemble_moderate, assemble_nonmagnetic
from wgspec.eigensolve import hermitian_defect
from wgspec.magnetics import field_on_curve, gauge_transform, uniform, zero_potential
from wgspec.reference_full import assemble_hollow_surface, full_spectrum

SETTINGS = settings(max_examples=12, deadline=None, suppress_health_check=[HealthCheck.too_slow])
CIRCLE = make_fiber({"kind": "circle"})
CIRCLE_VS = solve_vertical(CIRCLE)

fields = st.tuples(*[st.floats(-1.0, 1.0) for _ in range(3)])
gauges = st.sampled_from(["p1*p2", "sin(p3) + p1^2", "p1*p2*p3", "cos(p1 - p2)", "p3^3/3 - p2"])
offsets = st.tuples(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))


def off_square(c, twist=None):
    spec = {"kind": "grid", "mask": {"name": "square", "side": 1.0, "center": list(c)}, "h": 1 / 12}
    if twist is not None:
        spec["twist"] = twist
    return make_fiber(spec)


@SETTINGS
@given(B=fields, chi=gauges, c=offsets)
def test_gauge_invariance_effective(B, chi, c):
    fr = build_parallel_frame(circle(1.5), 96)
    fib = off_square(c)
    vs = solve_vertical(fib)
    A = uniform(B)
    a = assemble_moderate(fr, fib, vs, field_on_curve(A, fr), 0.1).spectrum(4)[1]
    b = assemble_moderate(fr, fib, vs, field_on_curve(gauge_transform(A, chi), fr), 0.1).spectrum(4)[1]
    np.testing.assert_allclose(a, b, atol=1e-10)


@SETTINGS
@given(B=fields, chi=gauges, sigma=st.sampled_from([0, 1]))
def test_gauge_invariance_full_hollow(B, chi, sigma):
    fr = build_parallel_frame(line(0, 2), 33)
    A = uniform(B)
    a = full_spectrum(assemble_hollow_surface(fr, CIRCLE, A, sigma, 0.2, n_y=32), 3)[0]
    b = full_spectrum(assemble_hollow_surface(fr, CIRCLE, gauge_transform(A, chi), sigma, 0.2, n_y=32), 3)[0]
    np.testing.assert_allclose(a, b, atol=1e-10)


@SETTINGS
@given(theta=st.floats(-np.pi, np.pi), B=fields, c=offsets,
       variant=st.sampled_from(["nonmagnetic", "moderate", "rigid_moderate", "strong_alpha0", "rigid_strong"]))
def test_frame_invariance_effective(theta, B, c, variant):
    curve = helix(1.0, 2.0, -2.0, 2.0)
    fr0 = build_parallel_frame(curve, 41)
    n0 = np.cos(theta) * fr0.e1[0] + np.sin(theta) * fr0.e2[0]
    fr1 = build_parallel_frame(curve, 41, initial_normal=n0)
    A = uniform(B)
    fib0 = off_square(c)
    vs = solve_vertical(fib0)
    fib1 = off_square(c, twist=repr(-theta))
    s0 = assemble(variant, fr0, fib0, vs, field_on_curve(A, fr0), 0.1).spectrum(3)
    s1 = assemble(variant, fr1, fib1, vs, field_on_curve(A, fr1), 0.1).spectrum(3)
    np.testing.assert_allclose(s0[0], s1[0], atol=1e-8)


@SETTINGS
@given(theta=st.floats(-np.pi, np.pi), B=fields)
def test_frame_invariance_hollow_full(theta, B):
    curve = helix(1.0, 2.0, -2.0, 2.0)
    fr0 = build_parallel_frame(curve, 33)
    n0 = np.cos(theta) * fr0.e1[0] + np.sin(theta) * fr0.e2[0]
    fr1 = build_parallel_frame(curve, 33, initial_normal=n0)
    A = uniform(B)
    a = full_spectrum(assemble_hollow_surface(fr0, CIRCLE, A, 1, 0.2, n_y=32), 3)[0]
    b = full_spectrum(assemble_hollow_surface(fr1, CIRCLE, A, 1, 0.2, n_y=32, angle_offset=-theta), 3)[0]
    np.testing.assert_allclose(a, b, atol=1e-8)


@SETTINGS
@given(a=st.floats(0.2, 3.0), b=st.floats(-3.0, 3.0), n=st.integers(16, 200))
def test_frame_orthonormal(a, b, n):
    fr = build_parallel_frame(helix(a, b, -3.0, 3.0), n)
    E = np.stack([fr.tau, fr.e1, fr.e2], axis=1)
    G = np.einsum("iak,ibk->iab", E, E)
    np.testing.assert_allclose(G, np.broadcast_to(np.eye(3), G.shape), atol=1e-8)


@settings(max_examples=6, deadline=None)
@given(c=offsets, side=st.floats(0.8, 1.4), kind=st.sampled_from(["square", "disk"]))
def test_lambda02_nonnegative_and_real_ground(c, side, kind):
    mask = square_mask(side, c) if kind == "square" else disk_mask(0.5 * side, c)
    vs = solve_vertical_grid(mask, 1 / 16)
    assert vs.lambda02_coeffs[0] >= 0 and vs.lambda02_coeffs[1] >= 0
    assert abs(vs.mean_L) < 1e-12


@SETTINGS
@given(B=fields, scale=st.floats(0.5, 2.0))
def test_diamagnetic_full(B, scale):
    fr = build_parallel_frame(line(0, 2), 33)
    fib = make_fiber({"kind": "circle", "scale": repr(scale)})
    with_field = full_spectrum(assemble_hollow_surface(fr, fib, uniform(B), 0, 0.2, n_y=32), 1)[0][0]
    without = full_spectrum(assemble_hollow_surface(fr, fib, zero_potential(), 0, 0.2, n_y=32), 1)[0][0]
    assert with_field >= without - 1e-10


@SETTINGS
@given(B=fields, c=offsets, variant=st.sampled_from(["nonmagnetic", "moderate", "rigid_moderate",
                                                     "strong_alpha0", "rigid_strong"]),
       eps=st.floats(0.01, 0.3))
def test_effective_hermitian(B, c, variant, eps):
    fr = build_parallel_frame(helix(1.0, 1.0, -2, 2), 41)
    fib = off_square(c, twist="0.3*x")
    vs = solve_vertical(fib)
    op = assemble(variant, fr, fib, vs, field_on_curve(uniform(B), fr), eps)
    assert hermitian_defect(op.matrix()) == 0.0


@settings(max_examples=8, deadline=None)
@given(length=st.floats(1.0, 6.0), n=st.integers(33, 121), eps=st.floats(0.02, 0.3))
def test_flat_separability(length, n, eps):
    fr = build_parallel_frame(line(0, length), n)
    h = length / (n - 1)
    k = np.arange(1, 4)
    fd = (4 / h**2) * np.sin(k * np.pi / (2 * (n - 1))) ** 2
    eff = assemble_nonmagnetic(fr, CIRCLE, CIRCLE_VS, eps).spectrum(3)[1]
    np.testing.assert_allclose(eff, fd, rtol=1e-9)
    asm = assemble_hollow_surface(fr, CIRCLE, zero_potential(), 0, eps, n_y=32)
    full = asm.rescale(full_spectrum(asm, 3)[0])
    # tensor-product lattice: sums of longitudinal and angular eigenvalues
    hy = 2 * np.pi / 32
    mu = (4 / hy**2) * np.sin(np.arange(-2, 3) * hy / 2) ** 2
    sums = np.sort((fd[:, None] + mu[None, :] / eps**2).ravel())[:3]
    np.testing.assert_allclose(full, sums, rtol=1e-8)
