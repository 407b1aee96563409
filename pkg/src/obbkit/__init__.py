"""Oriented bounding boxes, circular angle-regression losses, exact
rotated IoU and NMS, detection mAP, and aerial-image tiling arithmetic.
"""

from .boxes import (ConvexPolygon, OrientedBoxLE, OrientedBoxOC,
                    RegressionVector, aspect_ratio, box_to_regression,
                    canonicalize_le, convex_hull, corners_to_le,
                    le_to_corners, le_to_oc, min_area_rect,
                    normalize_angle_le, oc_to_le, regression_to_box)
from .circular import (VonMisesParams, bessel_i0, bessel_ip_integral,
                       circular_distance, exact_gamma, von_mises_pdf)
from .dota import (DOTA_CLASSES, AnnotationFile, PatchSpec, axis_origins,
                   merge_detections, multiscale_grid, parse_detection_file,
                   parse_dota_annotations, project_detection,
                   serialize_detections, tile_grid)
from .errors import (ConfigError, DomainError, GeometryError, ObbkitError,
                     ParseError)
from .evaluation import (Detection, GroundTruth, MapReport, PRCurve,
                         average_precision, make_pr_curve, map_at,
                         match_detections)
from .fitting import (BoundaryReport, BoxFitResult, FitConfig, Trajectory,
                      boundary_report, fit_angle, fit_box, make_angle_grid)
from .geometry import clip_convex, polygon_area, rotated_nms, skew_iou
from .losses import (ABFLConfig, KAPPA_GAMMA_TABLE, LossBreakdown, abfl,
                     abfl_ast, abfl_ast_grad, abfl_grad, abfl_strategy2,
                     abfl_strategy2_grad, smooth_l1, smooth_l1_grad,
                     squash_to_angle, total_loss)

__version__ = "0.1.0"

__all__ = [
    "ABFLConfig", "AnnotationFile", "BoundaryReport", "BoxFitResult",
    "ConfigError", "ConvexPolygon", "DOTA_CLASSES", "Detection",
    "DomainError", "FitConfig", "GeometryError", "GroundTruth",
    "KAPPA_GAMMA_TABLE", "LossBreakdown", "MapReport", "ObbkitError",
    "OrientedBoxLE", "OrientedBoxOC", "PRCurve", "ParseError", "PatchSpec",
    "RegressionVector", "Trajectory", "VonMisesParams", "abfl", "abfl_ast",
    "abfl_ast_grad", "abfl_grad", "abfl_strategy2", "abfl_strategy2_grad",
    "aspect_ratio", "average_precision", "axis_origins", "bessel_i0",
    "bessel_ip_integral", "boundary_report", "box_to_regression",
    "canonicalize_le", "circular_distance", "clip_convex", "convex_hull",
    "corners_to_le", "exact_gamma", "fit_angle", "fit_box", "le_to_corners",
    "le_to_oc", "make_angle_grid", "make_pr_curve", "map_at",
    "match_detections", "merge_detections", "min_area_rect",
    "multiscale_grid", "normalize_angle_le", "oc_to_le",
    "parse_detection_file", "parse_dota_annotations", "polygon_area",
    "project_detection", "regression_to_box", "rotated_nms",
    "serialize_detections", "skew_iou", "smooth_l1", "smooth_l1_grad",
    "squash_to_angle", "tile_grid", "total_loss", "von_mises_pdf",
]
