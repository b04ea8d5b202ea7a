"""Spectral reference solver for thin tubes and surfaces around space curves in magnetic fields."""

from .errors import *  # noqa: F401,F403
from .curve_frame import build_parallel_frame, make_curve
from .cross_section import make_fiber, solve_vertical, solve_vertical_grid, lambda02
from .magnetics import make_potential, field_on_curve
from .effective_ops import assemble, VARIANTS
from .reference_full import (assemble_hollow_surface, assemble_massive_tube, full_spectrum, spectral_distance,
                             convergence_fit)
from .eigensolve import lowest_eigenpairs
from .harness import ExperimentConfig, load_config, run_experiment, validate_config

__version__ = "0.1.0"
