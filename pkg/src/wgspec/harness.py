"""Experiment configuration, epsilon sweeps and result persistence."""

import csv
import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .cross_section import build_lattice, make_fiber, solve_vertical, solve_vertical_grid
from .curve_frame import build_parallel_frame, make_curve
from .effective_ops import VARIANTS, assemble
from .errors import ConfigError, SeamIncompatible, WaveguideError
from .eigensolve import SEED
from .magnetics import field_on_curve, make_potential, zero_potential
from .reference_full import (DEFAULT_CAP, assemble_hollow_surface, assemble_massive_tube, convergence_fit,
                             full_spectrum, seam_rotation, spectral_distance)

HOLLOW_VARIANTS = ("nonmagnetic", "hollow_strong")


@dataclass
class GridConfig:
    n_x: int = 401
    n_y: int = 64
    h_F: object = None  # one value or one per epsilon
    k: int = 8
    periodic_x: bool = False
    cap: int = DEFAULT_CAP

    def h_for(self, index):
        if isinstance(self.h_F, (list, tuple)):
            return float(self.h_F[index])
        return None if self.h_F is None else float(self.h_F)


@dataclass
class ExperimentConfig:
    curve: dict
    fiber: dict
    potential: Optional[dict] = None
    sigma: int = 0
    variants: list = field(default_factory=lambda: ["nonmagnetic"])
    epsilons: list = field(default_factory=lambda: [0.2, 0.1, 0.05])
    alpha: float = 2.0
    C: float = 1.0
    grid: GridConfig = field(default_factory=GridConfig)
    full: bool = True
    checks: dict = field(default_factory=dict)
    output_dir: str = "results"
    seed: int = SEED
    name: str = "experiment"

    def to_dict(self):
        return asdict(self)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class RunRecord:
    config_hash: str
    eigenvalues: dict  # variant -> list of (eps, index, raw, rescaled)
    distances: list  # rows (eps, variant, window_lo, window_hi, hausdorff, pairwise)
    slopes: dict
    checks: dict
    runtimes: dict


_KNOWN = {"curve", "fiber", "potential", "sigma", "variants", "epsilons", "alpha", "C", "grid", "full", "checks",
          "output_dir", "seed", "name"}


def load_config(source):
    """ExperimentConfig from a path, JSON string or dict."""
    if isinstance(source, ExperimentConfig):
        return source
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source) as fh:
            data = json.load(fh)
    elif isinstance(source, str):
        data = json.loads(source)
    else:
        data = dict(source)
    unknown = set(data) - _KNOWN
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    for key in ("curve", "fiber"):
        if key not in data:
            raise ConfigError(f"config needs a {key!r} entry")
    data = dict(data)
    data["grid"] = GridConfig(**data.get("grid", {}))
    return ExperimentConfig(**data)


def _frame(cfg):
    return build_parallel_frame(make_curve(cfg.curve), cfg.grid.n_x)


def validate_config(cfg):
    """Diagnostics as a list of (error name, message); empty when the config is usable."""
    out = []
    try:
        cfg = load_config(cfg)
    except (WaveguideError, TypeError, ValueError) as exc:
        return [(type(exc).__name__, str(exc))]
    eps = list(cfg.epsilons)
    if not eps or any(e <= 0 for e in eps):
        out.append(("ConfigError", "epsilons must be positive"))
    elif any(a <= b for a, b in zip(eps, eps[1:])):
        out.append(("ConfigError", "epsilons must be strictly descending"))
    if cfg.sigma not in (0, 1):
        out.append(("ConfigError", "sigma must be 0 or 1"))
    if not 0.0 <= cfg.alpha <= 2.0:
        out.append(("ConfigError", "alpha must lie in [0, 2]"))
    if isinstance(cfg.grid.h_F, (list, tuple)) and len(cfg.grid.h_F) != len(eps):
        out.append(("ConfigError", "h_F list must match the epsilon list"))
    try:
        fiber = make_fiber(cfg.fiber)
        frame = _frame(cfg)
        make_potential(cfg.potential)
    except (WaveguideError, ValueError, KeyError, TypeError) as exc:
        out.append((type(exc).__name__, str(exc)))
        return out
    for v in cfg.variants:
        if v not in VARIANTS:
            out.append(("ConfigError", f"unknown variant {v!r}"))
        elif not fiber.massive and v not in HOLLOW_VARIANTS:
            out.append(("UnsupportedFiber", f"variant {v} needs a massive fibre"))
        elif fiber.massive and v == "hollow_strong":
            out.append(("UnsupportedFiber", "hollow_strong needs the hollow circle fibre"))
    radius = 1.0
    if fiber.massive:
        mask = fiber.fiber_mask()
        b = mask.bbox
        radius = float(np.hypot(max(abs(b[0]), abs(b[1])), max(abs(b[2]), abs(b[3]))))
    if eps:
        l_max = float(np.max(fiber.scale_values(frame.grid)))
        k_max = float(np.max(np.hypot(frame.kappa1, frame.kappa2)))
        val = max(eps) * l_max * radius * k_max
        if val >= 1.0:
            out.append(("AdmissibilityViolated", f"eps*l_max*R*max|kappa| = {val:.3f} >= 1"))
    if frame.closed and fiber.massive:
        try:
            twist = fiber.twist_values(frame.grid)
            seam_rotation(frame, fiber.fiber_mask(), twist[-1] - twist[0])
        except SeamIncompatible as exc:
            out.append(("SeamIncompatible", str(exc)))
    if cfg.full:
        n = _unknowns(cfg, fiber, frame)
        if n is not None and n > cfg.grid.cap:
            out.append(("MemoryBudget", f"about {n} unknowns exceed the cap {cfg.grid.cap}"))
    return out


def _unknowns(cfg, fiber, frame):
    nx = cfg.grid.n_x - (1 if frame.closed or cfg.grid.periodic_x else 2)
    if not fiber.massive:
        return nx * cfg.grid.n_y
    hs = [cfg.grid.h_for(i) for i in range(len(cfg.epsilons))] or [None]
    h = min((x for x in hs if x), default=fiber.h)
    if h is None:
        return None
    b = fiber.fiber_mask().bbox
    return int(nx * (b[1] - b[0]) * (b[3] - b[2]) / h**2 * (np.pi / 4 if fiber.kind == "massive_disk" else 1.0))


class _Setup:
    """Shared per-run objects: frame, fibre, field and vertical data per mesh step."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.frame = _frame(cfg)
        self.fiber = make_fiber(cfg.fiber)
        self.A = make_potential(cfg.potential)
        self.foc = field_on_curve(self.A, self.frame)
        self.foc0 = field_on_curve(zero_potential(), self.frame)
        self._vertical = {}
        self._lock = threading.Lock()

    def mesh(self, index):
        h = self.cfg.grid.h_for(index)
        if h is None:
            h = self.fiber.h
        return h

    def vertical(self, index):
        """(VerticalSpectrum, lattice) for the mesh used at this epsilon."""
        h = self.mesh(index) if self.fiber.massive else None
        with self._lock:
            return self._vertical_locked(h)

    def _vertical_locked(self, h):
        if h not in self._vertical:
            if not self.fiber.massive:
                self._vertical[h] = (solve_vertical(self.fiber), None)
            elif h is None:
                if self.fiber.kind != "massive_disk":
                    raise ConfigError("grid fibres need h_F")
                self._vertical[h] = (solve_vertical(self.fiber), None)
            else:
                lat = build_lattice(self.fiber.fiber_mask(), h)
                self._vertical[h] = (solve_vertical_grid(self.fiber.fiber_mask(), h, lattice=lat), lat)
        return self._vertical[h]


def _effective(setup, variant, eps, index, field_free=False):
    vs, _ = setup.vertical(index)
    foc = setup.foc0 if field_free else setup.foc
    op = assemble(variant, setup.frame, setup.fiber, vs, foc, eps)
    if setup.cfg.grid.periodic_x:
        # translation-invariant runs close the base interval on itself, like the full operator
        op = replace(op, boundary="periodic")
    return op


def _full(setup, eps, index):
    cfg = setup.cfg
    if setup.fiber.massive:
        vs, lat = setup.vertical(index)
        if lat is None:
            raise ConfigError("the full massive operator needs h_F")
        return assemble_massive_tube(setup.frame, setup.fiber, setup.A, cfg.sigma, eps, h_F=setup.mesh(index),
                                     cap=cfg.grid.cap, lattice=lat, periodic_x=cfg.grid.periodic_x)
    return assemble_hollow_surface(setup.frame, setup.fiber, setup.A, cfg.sigma, eps, n_y=cfg.grid.n_y,
                                   cap=cfg.grid.cap, periodic_x=cfg.grid.periodic_x)


def _cell(setup, index, eps):
    """All solves for one epsilon: returns {variant: (raw, rescaled)}, runtimes, field-null gaps."""
    cfg = setup.cfg
    k = cfg.grid.k
    spectra, times, null_gaps = {}, {}, {}
    for v in cfg.variants:
        t0 = time.perf_counter()
        try:
            op = _effective(setup, v, eps, index)
            spectra[v] = op.spectrum(k)
            if "field_null" in cfg.checks:
                _, resc0 = _effective(setup, v, eps, index, field_free=True).spectrum(k)
                null_gaps[v] = float(np.max(np.abs(spectra[v][1] - resc0)))
        except WaveguideError as exc:
            raise type(exc)(f"[eps={eps}, variant={v}] {exc}") from exc
        times[v] = time.perf_counter() - t0
    if cfg.full:
        t0 = time.perf_counter()
        try:
            asm = _full(setup, eps, index)
            raw, _ = full_spectrum(asm, k)
        except WaveguideError as exc:
            raise type(exc)(f"[eps={eps}, variant=full] {exc}") from exc
        spectra["full"] = (raw, asm.rescale(raw))
        times["full"] = time.perf_counter() - t0
    return spectra, times, null_gaps


def comparison_window(raw_a, raw_b, eps, alpha, C):
    """[Lambda_0, Lambda_0 + C eps^alpha] on the raw scale.

    Lambda_0 is the lower of the two computed spectral bottoms; the top is
    clipped to the largest eigenvalue both lists actually resolve.
    """
    lo = float(min(raw_a[0], raw_b[0]))
    hi = lo + C * eps**alpha
    return lo, min(hi, float(raw_a[-1]), float(raw_b[-1]))


def run_experiment(cfg, out_dir=None, threads=1, write=True):
    cfg = load_config(cfg)
    problems = validate_config(cfg)
    if problems:
        raise ConfigError("; ".join(f"{n}: {m}" for n, m in problems))
    np.random.seed(cfg.seed)
    setup = _Setup(cfg)
    eps_list = [float(e) for e in cfg.epsilons]
    t_start = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(lambda ie: _cell(setup, *ie), enumerate(eps_list)))
    else:
        cells = [_cell(setup, i, e) for i, e in enumerate(eps_list)]

    eigen = {}
    for eps, (spectra, _, _) in zip(eps_list, cells):
        for v, (raw, resc) in spectra.items():
            rows = eigen.setdefault(v, [])
            rows.extend((eps, j, float(r), float(s)) for j, (r, s) in enumerate(zip(raw, resc)))

    distances = []
    if cfg.full:
        for eps, (spectra, _, _) in zip(eps_list, cells):
            full_raw, _ = spectra["full"]
            for v in cfg.variants:
                raw, _ = spectra[v]
                lo, hi = comparison_window(full_raw, raw, eps, cfg.alpha, cfg.C)
                haus, pair = spectral_distance(full_raw, raw, (lo, hi))
                # report on the rescaled scale, where the effective operators live
                distances.append((eps, v, lo, hi, haus / eps**2, pair / eps**2))

    slopes = {}
    for v in cfg.variants:
        pairs = [(d[0], d[4]) for d in distances if d[1] == v]
        if len(pairs) >= 2:
            try:
                slopes[v] = dict(zip(("slope", "intercept", "residual"), convergence_fit(pairs)))
            except WaveguideError as exc:
                slopes[v] = {"error": str(exc)}

    checks = evaluate_checks(cfg, distances, slopes, cells, eps_list, eigen)
    runtimes = {"total": time.perf_counter() - t_start}
    for eps, (_, times, _) in zip(eps_list, cells):
        for v, t in times.items():
            runtimes[f"{v}@{eps}"] = t
    rec = RunRecord(cfg.digest(), eigen, distances, slopes, checks, runtimes)
    if write:
        write_record(rec, cfg, out_dir or cfg.output_dir)
    return rec


def evaluate_checks(cfg, distances, slopes, cells, eps_list, eigen):
    out = {}
    ch = cfg.checks
    if "min_slope" in ch:
        for v, s in slopes.items():
            ok = "slope" in s and s["slope"] >= ch["min_slope"]
            out[f"slope[{v}]"] = {"value": s.get("slope"), "bound": ch["min_slope"], "pass": bool(ok)}
    if "max_distance" in ch:
        worst = max((d[4] for d in distances), default=np.nan)
        out["max_distance"] = {"value": worst, "bound": ch["max_distance"], "pass": bool(worst < ch["max_distance"])}
    if "field_null" in ch:
        worst = max((g for _, _, gaps in cells for g in gaps.values()), default=np.nan)
        out["field_null"] = {"value": worst, "bound": ch["field_null"], "pass": bool(worst < ch["field_null"])}
    if "target" in ch and "full" in eigen:
        t = ch["target"]
        errs = [abs(r[3] - t["value"]) for r in eigen["full"] if r[1] == 0]
        ratios = [b / a for a, b in zip(errs, errs[1:])]
        ok = all(q < t.get("max_ratio", 1.0) for q in ratios)
        out["target"] = {"errors": errs, "ratios": ratios, "bound": t.get("max_ratio", 1.0), "pass": bool(ok)}
    return out


def write_record(rec, cfg, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    for v, rows in rec.eigenvalues.items():
        with open(os.path.join(out_dir, f"eigenvalues_{v}.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epsilon", "sigma", "variant", "index", "lambda_raw", "lambda_rescaled"])
            for eps, j, raw, resc in rows:
                w.writerow([repr(eps), cfg.sigma, v, j, repr(raw), repr(resc)])
    with open(os.path.join(out_dir, "distances.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epsilon", "variant", "window_lo", "window_hi", "hausdorff", "pairwise"])
        for row in rec.distances:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    summary = {
        "name": cfg.name,
        "config_hash": rec.config_hash,
        "config": cfg.to_dict(),
        "slopes": rec.slopes,
        "checks": rec.checks,
        "pass": all(c["pass"] for c in rec.checks.values()),
        "runtimes": rec.runtimes,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=float)


def read_distances(path):
    """Rows of a persisted distances.csv as (eps, variant, lo, hi, hausdorff, pairwise)."""
    with open(path) as fh:
        r = csv.DictReader(fh)
        return [(float(d["epsilon"]), d["variant"], float(d["window_lo"]), float(d["window_hi"]),
                 float(d["hausdorff"]), float(d["pairwise"])) for d in r]


def operator_for(cfg, variant, eps):
    """Assembled operator (effective or 'full') at one epsilon, for dumps and inspection."""
    cfg = load_config(cfg)
    setup = _Setup(cfg)
    index = min(range(len(cfg.epsilons)), key=lambda i: abs(cfg.epsilons[i] - eps)) if cfg.epsilons else 0
    if variant == "full":
        return _full(setup, eps, index)
    return _effective(setup, variant, eps, index)
