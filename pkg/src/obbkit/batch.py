"""Array-oriented wrappers over the scalar kernels, used by the CLI batch
endpoint and any foreign-language bindings: element-wise angle loss and
gradient, element-wise or pairwise rotated IoU, NMS over packed box
arrays, and record conversion helpers.
"""

import math
from dataclasses import dataclass

import numpy as np

from .boxes import OrientedBoxLE, canonicalize_le
from .errors import DomainError
from .evaluation import Detection, GroundTruth
from .geometry import rotated_nms
from .geometry import skew_iou as _skew_iou_scalar
from .losses import ABFLConfig


def _as_1d(name, values):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be a 1-d array, got shape {arr.shape}")
    return arr


def batch_abfl(theta_pred, theta_gt, cfg: ABFLConfig):
    """Element-wise plain angle loss and gradient over two equal-length
    angle arrays; returns (loss, grad) float64 arrays.
    """
    pred = _as_1d("theta_pred", theta_pred)
    gt = _as_1d("theta_gt", theta_gt)
    if pred.shape != gt.shape:
        raise DomainError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(gt))):
        raise DomainError("angles must be finite")
    d = pred - gt
    cos_ld = np.cos(cfg.lam * d)
    if cfg.gamma_mode == "exact":
        ratio = np.exp(cfg.kappa * (cos_ld - 1.0))
    else:
        from .circular import bessel_i0
        norm = 2.0 * math.pi * bessel_i0(cfg.kappa) * cfg.gamma
        ratio = np.exp(cfg.kappa * cos_ld) / norm
    loss = np.maximum(0.0, 1.0 - ratio)
    grad = cfg.lam * cfg.kappa * np.sin(cfg.lam * d) * ratio
    return loss, grad


def boxes_from_array(arr) -> list:
    """Rows of (cx, cy, w, h, theta) to canonical long-edge boxes."""
    a = np.asarray(arr, dtype=np.float64)
    if a.size == 0:
        return []
    if a.ndim != 2 or a.shape[1] != 5:
        raise DomainError(f"boxes must have shape (n, 5), got {a.shape}")
    return [canonicalize_le(*row) for row in a]


def box_to_row(box: OrientedBoxLE) -> list:
    return [box.cx, box.cy, box.w, box.h, box.theta]


def batch_skew_iou(boxes_a, boxes_b, pairwise: bool = False):
    """Rotated IoU over packed (n, 5) box arrays.

    Element-wise mode requires equal lengths and returns shape (n,);
    pairwise mode returns the full (n, m) matrix.
    """
    list_a = boxes_from_array(boxes_a)
    list_b = boxes_from_array(boxes_b)
    if pairwise:
        out = np.empty((len(list_a), len(list_b)), dtype=np.float64)
        for i, a in enumerate(list_a):
            for j, b in enumerate(list_b):
                out[i, j] = _skew_iou_scalar(a, b)
        return out
    if len(list_a) != len(list_b):
        raise DomainError(f"shape mismatch: {len(list_a)} vs {len(list_b)} boxes")
    return np.array([_skew_iou_scalar(a, b) for a, b in zip(list_a, list_b)],
                    dtype=np.float64)


@dataclass(frozen=True)
class _ScoredBox:
    box: OrientedBoxLE
    score: float
    class_id: int


def batch_rotated_nms(boxes, scores, class_ids=None, iou_thresh: float = 0.1,
                      class_aware: bool = True) -> list:
    """NMS over packed arrays; returns kept indices by descending score."""
    box_list = boxes_from_array(boxes)
    score_arr = _as_1d("scores", scores)
    if len(box_list) != score_arr.shape[0]:
        raise DomainError("boxes and scores must have the same length")
    if class_ids is None:
        ids = [0] * len(box_list)
    else:
        ids = [int(c) for c in np.asarray(class_ids).ravel()]
        if len(ids) != len(box_list):
            raise DomainError("boxes and class_ids must have the same length")
    dets = [_ScoredBox(b, float(s), c)
            for b, s, c in zip(box_list, score_arr, ids)]
    return rotated_nms(dets, iou_thresh, class_aware=class_aware)


def detection_from_dict(rec: dict) -> Detection:
    return Detection(box=canonicalize_le(*rec["box"]),
                     class_id=int(rec["class_id"]),
                     score=float(rec["score"]),
                     image_id=str(rec.get("image_id", "")))


def ground_truth_from_dict(rec: dict) -> GroundTruth:
    return GroundTruth(box=canonicalize_le(*rec["box"]),
                       class_id=int(rec["class_id"]),
                       difficulty=int(rec.get("difficulty", 0)),
                       image_id=str(rec.get("image_id", "")))
