"""Acceptance runs.  Each test prints one PASS/FAIL line (visible with or without -s)."""

import time

import numpy as np
import pytest

from wgspec.cli import lambda02_oracle
from wgspec.cross_section import disk_mask, make_fiber, solve_vertical, solve_vertical_grid
from wgspec.curve_frame import build_parallel_frame, line
from wgspec.effective_ops import assemble_hollow_strong
from wgspec.harness import load_config, run_experiment
from wgspec.magnetics import field_on_curve, uniform

import test_properties as props

pytestmark = pytest.mark.slow


@pytest.fixture
def report(capsys):
    def emit(tag, ok, detail):
        with capsys.disabled():
            print(f"\n{tag} {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, f"{tag}: {detail}"

    return emit


def test_ac1_disk_moment(report, oracles):
    t0 = time.perf_counter()
    rows = []
    ok = True
    for h, tol in ((1 / 64, 0.01), (1 / 128, 0.003)):
        vs = solve_vertical_grid(disk_mask(1.0), h, with_lambda02=False)
        e_m = abs(vs.mean_ysq - 0.218) / 0.218
        e_l = abs(vs.lambda0 - oracles["j01"] ** 2) / oracles["j01"] ** 2
        ok &= e_m < tol and e_l < tol
        rows.append(f"h=1/{round(1 / h)}: <|y|^2>={vs.mean_ysq:.5f} (rel {e_m:.2e}) lambda0={vs.lambda0:.5f} "
                    f"(rel {e_l:.2e}) tol {tol}")
    dt = time.perf_counter() - t0
    report("AC-1", ok and dt < 30, "; ".join(rows) + f"; {dt:.1f}s")


def test_ac2_lambda02_oracle(report, config_dir):
    t0 = time.perf_counter()
    circle = solve_vertical(make_fiber({"kind": "circle"}))
    fr = build_parallel_frame(line(0, 2), 33)
    ell, B0 = 1.3, 0.8
    fib = make_fiber({"kind": "circle", "scale": repr(ell)})
    V = assemble_hollow_strong(fr, fib, circle, field_on_curve(uniform((0, 0, B0)), fr), 0.1).potential
    hollow_ok = circle.lambda02_coeffs[0] == 0.25 and np.max(np.abs(V - 0.25 * ell**2 * B0**2)) < 1e-14
    res = lambda02_oracle(str(config_dir / "lambda02_disk.json"))
    dt = time.perf_counter() - t0
    ok = hollow_ok and res["relative_difference"] < 0.02 and dt < 120
    report("AC-2", ok, f"hollow c_par={circle.lambda02_coeffs[0]} exact={hollow_ok}; disk resolvent "
                       f"{res['resolvent']:.7f} bruteforce {res['bruteforce']:.7f} "
                       f"rel {res['relative_difference']:.1e}; {dt:.1f}s")


def test_ac3_hollow_strong_convergence(report, config_dir, tmp_path):
    t0 = time.perf_counter()
    rec = run_experiment(str(config_dir / "hollow_strong_bump.json"), out_dir=str(tmp_path), threads=3)
    dt = time.perf_counter() - t0
    slope = rec.slopes["hollow_strong"]["slope"]
    d = [f"{r[4]:.3e}" for r in rec.distances]
    report("AC-3", slope >= 0.8 and dt < 600, f"slope={slope:.3f} distances={d}; {dt:.1f}s")


def test_ac4_moderate_null(report, config_dir, tmp_path):
    t0 = time.perf_counter()
    cfg = load_config(str(config_dir / "rigid_moderate_disk.json"))
    rec = run_experiment(cfg, out_dir=str(tmp_path), threads=2)
    dt = time.perf_counter() - t0
    null = rec.checks["field_null"]["value"]
    ground = {v: {r[0]: r[3] for r in rows if r[1] == 0} for v, rows in rec.eigenvalues.items()}
    e1, e2 = cfg.epsilons
    d1 = abs(ground["full"][e1] - ground["nonmagnetic"][e1])
    d2 = abs(ground["full"][e2] - ground["nonmagnetic"][e2])
    slope = np.log(d1 / d2) / np.log(e1 / e2)
    ok = null < 1e-8 and slope >= 0.8 and dt < 900
    report("AC-4", ok, f"field null {null:.1e}; ground gaps {d1:.4e}, {d2:.4e} slope={slope:.3f}; {dt:.1f}s")


def test_ac5_strong_axial(report, config_dir, tmp_path):
    t0 = time.perf_counter()
    rec = run_experiment(str(config_dir / "strong_axial_disk.json"), out_dir=str(tmp_path), threads=2)
    dt = time.perf_counter() - t0
    errs = [abs(r[3] - 0.25 * 0.218) for r in rec.eigenvalues["full"] if r[1] == 0]
    ratio = errs[1] / errs[0]
    report("AC-5", ratio < 0.6 and dt < 1200, f"errors vs 0.0545: {errs[0]:.3e}, {errs[1]:.3e} ratio {ratio:.3f}; "
                                            f"{dt:.1f}s")


def test_ac6_invariants(report):
    t0 = time.perf_counter()
    suite = [props.test_gauge_invariance_effective, props.test_gauge_invariance_full_hollow,
             props.test_frame_invariance_effective, props.test_frame_invariance_hollow_full,
             props.test_frame_orthonormal, props.test_lambda02_nonnegative_and_real_ground,
             props.test_diamagnetic_full, props.test_effective_hermitian, props.test_flat_separability]
    failed = []
    for fn in suite:
        try:
            fn()
        except AssertionError as exc:
            failed.append(f"{fn.__name__}: {str(exc).splitlines()[0] if str(exc) else 'assertion'}")
    dt = time.perf_counter() - t0
    detail = "; ".join([f"{len(suite) - len(failed)}/{len(suite)} properties hold"] + failed + [f"{dt:.1f}s"])
    report("AC-6", not failed and dt < 300, detail)
