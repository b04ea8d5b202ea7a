import numpy as np
import pytest
from scipy import special

from wgspec.cross_section import (J01, annulus_mask, bessel_j, bessel_zeros, build_lattice, disk_mask, lambda02,
                                  lambda02_bruteforce, make_fiber, make_mask, solve_vertical, solve_vertical_circle,
                                  solve_vertical_disk, solve_vertical_grid, square_mask, csv_mask)
from wgspec.errors import ConfigError, GapTooSmall, MeshTooCoarse, UnsupportedFiber


def test_bessel_series_against_scipy():
    x = np.linspace(0, 12, 49)
    for n in (0, 1, 2):
        np.testing.assert_allclose(bessel_j(n, x), special.jv(n, x), atol=1e-12)


def test_bessel_zeros_against_scipy():
    np.testing.assert_allclose(bessel_zeros(0, 3), special.jn_zeros(0, 3), rtol=1e-13)
    np.testing.assert_allclose(bessel_zeros(1, 2), special.jn_zeros(1, 2), rtol=1e-13)


def test_disk_analytic(oracles):
    vs = solve_vertical_disk(1.0)
    assert J01 == pytest.approx(oracles["j01"], rel=1e-13)
    assert J01 == pytest.approx(2.405, abs=5e-4)
    assert vs.lambda0 == pytest.approx(oracles["disk_lambda0"], rel=1e-12)
    assert vs.mean_ysq == pytest.approx(oracles["disk_mean_ysq"], rel=1e-10)
    assert vs.mean_ysq == pytest.approx(0.218, abs=5e-4)
    assert vs.Lnorm_sq == 0.0
    np.testing.assert_array_equal(vs.mean_y, 0.0)
    assert vs.gap == pytest.approx(oracles["disk_second_zero_m1"] ** 2 - oracles["disk_lambda0"], rel=1e-10)


def test_disk_dilation():
    a, b = solve_vertical_disk(1.0), solve_vertical_disk(2.0)
    assert b.lambda0 == pytest.approx(a.lambda0 / 4)
    assert b.mean_ysq == pytest.approx(4 * a.mean_ysq)


def test_disk_ground_state_normalised():
    vs = solve_vertical_disk(1.0)
    r = np.linspace(0, 1, 20001)
    f = vs.ground_state(np.stack([r, 0 * r], 1)) ** 2 * 2 * np.pi * r
    assert np.trapezoid(f, r) == pytest.approx(1.0, abs=1e-7)


def test_circle_data():
    vs = solve_vertical_circle()
    assert vs.lambda0 == 0 and vs.eigenvalues[1] == 1 and vs.gap == 1
    np.testing.assert_array_equal(vs.mean_y, 0.0)
    # constant ground state normalised on the circle of any radius l: |Phi|^2 * 2 pi l = 1 at unit scale
    y = np.linspace(0, 2 * np.pi, 7)
    np.testing.assert_allclose(vs.ground_state(y) ** 2 * 2 * np.pi, 1.0)


def test_grid_disk_orders(oracles):
    rows = []
    for h in (1 / 16, 1 / 32, 1 / 64):
        vs = solve_vertical_grid(disk_mask(1.0), h)
        rows.append((vs.lambda0 - oracles["disk_lambda0"], vs.mean_ysq - oracles["disk_mean_ysq"]))
        assert abs(vs.mean_L) < 1e-8
        assert np.linalg.norm(vs.mean_y) < 1e-6
        assert np.all(vs.ground_state >= 0)
        assert h**2 * vs.ground_state @ vs.ground_state == pytest.approx(1.0)
    e = np.abs(np.array(rows))
    rates = np.log2(e[:-1] / e[1:])
    assert np.all(rates > 1.7), rates


def test_unit_square(oracles):
    vs = solve_vertical_grid(square_mask(1.0, (0.5, 0.5)), 1 / 32)
    assert vs.lambda0 == pytest.approx(oracles["square_lambda0"], rel=1e-2)
    np.testing.assert_allclose(vs.mean_y, [0.5, 0.5], atol=1e-10)
    var = np.trace(vs.second_moment) - vs.mean_y @ vs.mean_y
    assert var == pytest.approx(2 * oracles["square_var_per_axis"], rel=2e-3)


def test_centred_square_symmetry():
    vs = solve_vertical_grid(square_mask(1.0, (0.0, 0.0)), 1 / 32)
    assert np.linalg.norm(vs.mean_y) < 1e-6
    assert abs(vs.mean_L) < 1e-8


def test_square_angular_moment_converges_first_order(oracles):
    # central differences miss the boundary half-cells where L Phi != 0: O(h) convergence
    errs = []
    for h in (1 / 16, 1 / 32, 1 / 64):
        errs.append(oracles["square_Lnorm_sq"] - solve_vertical_grid(square_mask(1.0, (0, 0)), h).Lnorm_sq)
    errs = np.array(errs)
    assert np.all(errs > 0) and np.all(errs[1:] < 0.7 * errs[:-1])
    # linear extrapolation from the two finest meshes lands within 1.5%
    assert 2 * (oracles["square_Lnorm_sq"] - errs[2]) - (oracles["square_Lnorm_sq"] - errs[1]) == pytest.approx(
        oracles["square_Lnorm_sq"], rel=1.5e-2)


def test_lambda02_hollow_closed_form():
    vs = solve_vertical_circle()
    assert lambda02(vs, 3.0, scale=2.0) == pytest.approx(9.0)
    assert lambda02(vs, 0.0) == 0.0


def test_lambda02_disk_analytic(oracles):
    vs = solve_vertical_disk(1.0)
    assert lambda02(vs, 1.0) == pytest.approx(oracles["disk_c_par"], rel=1e-10)
    assert lambda02(vs, 1.0) == pytest.approx(0.25 * 0.218, rel=2e-3)


def test_lambda02_resolvent_matches_bruteforce():
    h = 1 / 24
    lat = build_lattice(disk_mask(1.0), h)
    vs = solve_vertical_grid(disk_mask(1.0), h, lattice=lat)
    c2, _, _, _ = lambda02_bruteforce(lat)
    assert vs.lambda02_coeffs[0] == pytest.approx(c2, rel=1e-5)


def test_lambda02_off_centre_has_paramagnetic_part():
    # for an off-centre square the resolvent term is nonzero but the total stays positive
    h = 1 / 20
    m = square_mask(1.0, (0.5, 0.5))
    lat = build_lattice(m, h)
    vs = solve_vertical_grid(m, h, lattice=lat)
    c2, _, _, _ = lambda02_bruteforce(lat)
    assert vs.lambda02_coeffs[0] == pytest.approx(c2, rel=1e-4)
    assert 0 < vs.lambda02_coeffs[0] < 0.25 * np.trace(vs.second_moment)


def test_gap_too_small():
    from dataclasses import replace

    vs = replace(solve_vertical_disk(1.0), eigenvalues=np.array([1.0, 1.0 + 1e-10]))
    with pytest.raises(GapTooSmall):
        lambda02(vs, 1.0)


def test_mesh_too_coarse():
    with pytest.raises(MeshTooCoarse):
        build_lattice(disk_mask(1.0), 0.25)


def test_disconnected_mask():
    from wgspec.cross_section import Mask

    m = Mask("two", lambda p: np.minimum(np.hypot(p[:, 0] - 2, p[:, 1]), np.hypot(p[:, 0] + 2, p[:, 1])) - 1,
             (-3, 3, -1, 1))
    with pytest.raises(ConfigError):
        build_lattice(m, 0.1)


def test_annulus_and_csv_masks(tmp_path):
    lat = build_lattice(annulus_mask(0.4, 1.0), 1 / 16)
    r = np.hypot(lat.points[:, 0], lat.points[:, 1])
    assert r.min() > 0.4 and r.max() < 1.0
    grid = np.ones((12, 12), dtype=int)
    grid[0, :] = grid[-1, :] = grid[:, 0] = grid[:, -1] = 0
    path = tmp_path / "mask.csv"
    np.savetxt(path, grid, fmt="%d", delimiter=",")
    m = make_mask(str(path), 0.1)
    assert build_lattice(m, 0.1).n == 100


def test_make_fiber_kinds():
    assert make_fiber({"kind": "disk", "radius": 2.0}).kind == "massive_disk"
    assert make_fiber({"kind": "grid", "mask": "square", "h": 0.05}).kind == "massive_grid"
    f = make_fiber({"kind": "circle", "scale": "1 + 0.3*sech(x)"})
    assert f.scale_values(np.array([0.0]))[0] == pytest.approx(1.3)
    assert not f.rigid
    with pytest.raises(ConfigError):
        make_fiber({"kind": "torus"})
    with pytest.raises(UnsupportedFiber):
        make_fiber({"kind": "circle", "twist": "x"})


def test_solve_vertical_dispatch():
    assert solve_vertical(make_fiber({"kind": "circle"})).hollow
    assert solve_vertical(make_fiber({"kind": "disk"})).kind == "massive_disk"
    assert solve_vertical(make_fiber({"kind": "grid", "mask": "disk", "h": 1 / 16})).kind == "massive_grid"
