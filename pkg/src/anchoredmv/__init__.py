"""Triangulation of collinear points through anchored multiview varieties."""
from .constraints import (
    LineTrack,
    PointTrack,
    anchored_line_residuals,
    anchored_point_residuals,
    line_mv_residuals,
    multidegree_check,
    point_mv_residuals,
)
from .pipeline import (
    METHODS,
    MethodResult,
    NoisyObservation,
    RunStats,
    Scene,
    aggregate,
    benchmark,
    error_metric,
    generate_scene,
    observe,
    run_L1_0,
    run_L1_1,
    run_L1_2,
    run_L1_3,
    run_L1_4,
    run_method,
)
from .projective import (
    Camera,
    CameraArrangement,
    HomPoint2,
    HomPoint3,
    ImageLine,
    SpatialLine,
    SpatialPlane,
)
from .reduction import lift_line, lift_point, reduce_anchored_line, reduce_anchored_point

__version__ = "0.1.0"
