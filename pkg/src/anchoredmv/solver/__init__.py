"""Polynomial critical-point solving: companion matrices and homotopy continuation."""
from .edd import EXPECTED, VARIETIES, EddStats, count_edd
from .homotopy import CriticalPointSet, PathStatus, TrackerConfig, solve_polynomials, track_paths
from .polynomial import Poly
from .refine import gauss_newton_refine, multistart_refine
from .systems import (
    CriticalSystem,
    build_anchored_line_system,
    build_anchored_point_system,
    build_point_mv_system,
    real_minimizer,
    solve_critical,
)
from .univariate import solve_univariate
