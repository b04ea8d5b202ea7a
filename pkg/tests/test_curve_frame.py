import numpy as np
import pytest

from wgspec.curve_frame import (bump_curve, build_parallel_frame, circle, curvature_norm_sq, helix, line,
                                load_sampled_curve, make_curve, orthonormality_error, rotate_normal,
                                sampled_curve)
from wgspec.errors import DegenerateNormal, EvaluationDomain, NonUnitSpeed


def test_helix_curvature_is_quarter(oracles):
    fr = build_parallel_frame(helix(1.0, 1.0), 512)
    np.testing.assert_allclose(curvature_norm_sq(fr), oracles["helix_a1_b1_kappa_sq"], atol=1e-12)


def test_straight_line_has_no_curvature():
    fr = build_parallel_frame(line(0, 3), 64)
    assert np.max(np.abs(fr.kappa)) == 0.0
    np.testing.assert_allclose(fr.e1[0], [1, 0, 0])
    np.testing.assert_allclose(fr.e2[0], [0, 1, 0])


@pytest.mark.parametrize("curve", [helix(1.0, 1.0), helix(2.0, 0.5), circle(1.5), bump_curve()])
def test_orthonormal_frame(curve):
    fr = build_parallel_frame(curve, 256)
    assert orthonormality_error(fr) <= 1e-8


def test_normals_are_parallel_transported():
    # e_j' must be tangential: project the finite-difference derivative onto the normal plane
    fr = build_parallel_frame(helix(1.0, 2.0), 2001)
    de1 = np.gradient(fr.e1, fr.step, axis=0)
    normal_part = de1 - np.einsum("ij,ij->i", de1, fr.tau)[:, None] * fr.tau
    assert np.max(np.abs(normal_part[2:-2])) < 1e-5


def test_circle_curvature_and_holonomy():
    R = 2.0
    fr = build_parallel_frame(circle(R), 400)
    np.testing.assert_allclose(curvature_norm_sq(fr), 1 / R**2, rtol=1e-12)
    assert abs(fr.holonomy_angle) < 1e-10


def test_bump_curve_curvature_profile():
    fr = build_parallel_frame(bump_curve(0.5, 1.0, -6, 6), 601)
    np.testing.assert_allclose(np.sqrt(curvature_norm_sq(fr)), 0.5 / np.cosh(fr.grid) ** 2, atol=1e-12)
    c, _, _ = fr.curve.eval(np.array([0.0]))
    np.testing.assert_allclose(c[0], 0.0, atol=1e-14)


def test_fourth_order_refinement():
    # helix frames on N and 2N points: the rotation of (kappa1, kappa2) relative to the
    # exact frame decays like dx^4
    cur = helix(1.0, 0.5, -4, 4)
    errs = []
    ref = build_parallel_frame(cur, 4097)
    for n in (65, 129, 257):
        fr = build_parallel_frame(cur, n)
        stride = (4097 - 1) // (n - 1)
        errs.append(np.max(np.abs(fr.kappa1 - ref.kappa1[::stride])))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.5), rates


def test_initial_normal_rotation_keeps_curvature_norm():
    cur = helix(1.0, 2.0)
    fr = build_parallel_frame(cur, 300)
    fr2 = build_parallel_frame(cur, 300, initial_normal=rotate_normal(fr, 0, 1.1))
    np.testing.assert_allclose(curvature_norm_sq(fr2), curvature_norm_sq(fr), atol=1e-8)
    # the components rotate rigidly
    c, s = np.cos(1.1), np.sin(1.1)
    np.testing.assert_allclose(fr2.kappa1, c * fr.kappa1 + s * fr.kappa2, atol=1e-8)


def test_degenerate_normal():
    cur = line(0, 1)
    with pytest.raises(DegenerateNormal):
        build_parallel_frame(cur, 32, initial_normal=[0, 0, 2.0])
    with pytest.raises(DegenerateNormal):
        build_parallel_frame(cur, 32, initial_normal=[0, 0, 0])


def test_non_unit_speed_rejected():
    xs = np.linspace(0, 1, 50)
    pts = np.stack([2 * xs, 0 * xs, 0 * xs], axis=1)
    with pytest.raises(NonUnitSpeed):
        build_parallel_frame(sampled_curve(xs, pts), 32)


def test_open_curve_domain():
    with pytest.raises(EvaluationDomain):
        line(0, 1).eval([1.5])


def test_sampled_curve_matches_analytic(tmp_path):
    xs = np.linspace(-3, 3, 601)
    c, _, _ = helix(1.0, 1.0, -3, 3).eval(xs)
    path = tmp_path / "helix.csv"
    np.savetxt(path, np.column_stack([xs, c]), delimiter=",")
    cur = load_sampled_curve(str(path))
    fr = build_parallel_frame(cur, 301)
    np.testing.assert_allclose(curvature_norm_sq(fr)[5:-5], 0.25, atol=1e-6)


def test_make_curve_names():
    assert make_curve("line").kind == "line"
    assert make_curve({"name": "circle", "radius": 2.0}).closed
    assert make_curve({"name": "helix", "a": 1.0, "b": 1.0}).kind == "helix"
    assert make_curve({"name": "bump_curve"}).kind == "bump_curve"
