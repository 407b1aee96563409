"""Rotated-detection evaluation: greedy score-ordered matching, precision/
recall curves, and interpolated average precision under the 11-point and
101-point protocols.
"""

import math
from dataclasses import dataclass

from .boxes import OrientedBoxLE
from .errors import ConfigError, DomainError
from .geometry import skew_iou

PROTOCOLS = ("voc07", "coco101")


@dataclass(frozen=True)
class Detection:
    """Scored predicted box on one image."""

    box: OrientedBoxLE
    class_id: int
    score: float
    image_id: str = ""

    def __post_init__(self):
        if self.class_id < 0:
            raise DomainError(f"class_id must be >= 0, got {self.class_id}")
        if not math.isfinite(self.score) or not (0.0 <= self.score <= 1.0):
            raise DomainError(f"score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class GroundTruth:
    """Labeled box; difficulty 1 marks instances ignored by evaluation."""

    box: OrientedBoxLE
    class_id: int
    difficulty: int = 0
    image_id: str = ""

    def __post_init__(self):
        if self.difficulty not in (0, 1):
            raise DomainError(f"difficulty must be 0 or 1, got {self.difficulty}")


@dataclass(frozen=True)
class PRCurve:
    """Ranked tp/fp flags with the derived precision/recall points."""

    flags: tuple          # True = TP, in descending-score order
    n_gt: int             # non-ignored ground truths
    points: tuple         # (recall, precision) per ranked detection

    def __post_init__(self):
        last_r = 0.0
        for r, p in self.points:
            if r < last_r - 1e-12:
                raise DomainError("recall must be non-decreasing along rank")
            if not (0.0 <= p <= 1.0):
                raise DomainError(f"precision out of range: {p}")
            last_r = r


def make_pr_curve(flags, n_gt: int) -> PRCurve:
    """Accumulate ranked tp/fp flags into a precision/recall curve."""
    if n_gt < 0:
        raise DomainError(f"n_gt must be >= 0, got {n_gt}")
    tp = 0
    points = []
    for rank, is_tp in enumerate(flags, start=1):
        if is_tp:
            tp += 1
        recall = tp / n_gt if n_gt > 0 else 0.0
        points.append((recall, tp / rank))
    return PRCurve(tuple(bool(f) for f in flags), n_gt, tuple(points))


def match_detections(dets, gts, iou_thresh: float):
    """Greedily match one image+class group of detections against its
    ground truths.

    Detections are taken in descending score order (ties keep input
    order). Each one claims the unmatched non-ignored ground truth of
    highest overlap when that overlap reaches ``iou_thresh`` (TP);
    otherwise, if its best overlap with an ignored ground truth reaches
    the threshold, it is discarded entirely; otherwise it is an FP.

    Returns (results, n_gt) where results is a list of
    (det_index, score, is_tp) in match order, with discarded detections
    omitted.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    matched = [False] * len(gts)
    results = []
    for i in order:
        det = dets[i]
        best_iou, best_j = 0.0, -1
        best_ignored = 0.0
        for j, gt in enumerate(gts):
            iou = skew_iou(det.box, gt.box)
            if gt.difficulty == 1:
                best_ignored = max(best_ignored, iou)
            elif not matched[j] and iou > best_iou:
                best_iou, best_j = iou, j
        if best_j >= 0 and best_iou >= iou_thresh:
            matched[best_j] = True
            results.append((i, det.score, True))
        elif best_ignored >= iou_thresh:
            continue
        else:
            results.append((i, det.score, False))
    n_gt = sum(1 for gt in gts if gt.difficulty == 0)
    return results, n_gt


def _interp_precision(points, level: float) -> float:
    best = 0.0
    for r, p in points:
        if r >= level and p > best:
            best = p
    return best


def average_precision(pr: PRCurve, protocol: str = "voc07"):
    """Interpolated AP; None when the curve has no ground truths."""
    if protocol not in PROTOCOLS:
        raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {protocol!r}")
    if pr.n_gt == 0:
        return None
    n_levels = 11 if protocol == "voc07" else 101
    step = 1.0 / (n_levels - 1)
    total = math.fsum(_interp_precision(pr.points, i * step)
                      for i in range(n_levels))
    return total / n_levels


@dataclass(frozen=True)
class MapReport:
    """AP per (class, threshold) plus threshold and overall means."""

    protocol: str
    thresholds: tuple
    per_class: dict       # class_id -> {threshold: ap or None}
    per_threshold: dict   # threshold -> mean ap over evaluated classes
    map50: float | None
    map75: float | None
    map_mean: float


def _find_threshold(per_threshold: dict, target: float):
    for t, v in per_threshold.items():
        if abs(t - target) < 1e-9:
            return v
    return None


def map_at(dets, gts, thresholds, protocol: str = "voc07") -> MapReport:
    """Evaluate detections against ground truths at each IoU threshold.

    AP is computed per class by pooling matches across images; classes
    without any non-ignored ground truth are excluded from the means. The
    overall mean averages the per-threshold means.
    """
    if protocol not in PROTOCOLS:
        raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {protocol!r}")
    thresholds = tuple(float(t) for t in thresholds)
    if not thresholds:
        raise ConfigError("at least one IoU threshold is required")
    if not gts:
        raise ConfigError("no ground truths to evaluate against")

    class_ids = sorted({g.class_id for g in gts})
    gt_by_key = {}
    for g in gts:
        gt_by_key.setdefault((g.class_id, g.image_id), []).append(g)
    det_by_class = {c: [] for c in class_ids}
    for i, d in enumerate(dets):
        if d.class_id in det_by_class:
            det_by_class[d.class_id].append((i, d))

    per_class = {c: {} for c in class_ids}
    per_threshold = {}
    for thr in thresholds:
        ap_values = []
        for c in class_ids:
            image_ids = sorted({img for (cc, img) in gt_by_key if cc == c}
                               | {d.image_id for _, d in det_by_class[c]})
            pooled = []
            n_gt = 0
            for img in image_ids:
                img_dets = [(i, d) for i, d in det_by_class[c] if d.image_id == img]
                img_gts = gt_by_key.get((c, img), [])
                results, n = match_detections([d for _, d in img_dets], img_gts, thr)
                pooled.extend((score, img_dets[local][0], is_tp)
                              for local, score, is_tp in results)
                n_gt += n
            # Global rank: descending score, ties by original input order.
            pooled.sort(key=lambda item: (-item[0], item[1]))
            flags = [is_tp for _, _, is_tp in pooled]
            ap = average_precision(make_pr_curve(flags, n_gt), protocol)
            per_class[c][thr] = ap
            if ap is not None:
                ap_values.append(ap)
        per_threshold[thr] = (math.fsum(ap_values) / len(ap_values)
                              if ap_values else None)

    defined = [v for v in per_threshold.values() if v is not None]
    if not defined:
        raise ConfigError("no class had evaluable ground truth")
    map_mean = math.fsum(defined) / len(defined)
    return MapReport(
        protocol=protocol,
        thresholds=thresholds,
        per_class=per_class,
        per_threshold=per_threshold,
        map50=_find_threshold(per_threshold, 0.50),
        map75=_find_threshold(per_threshold, 0.75),
        map_mean=map_mean,
    )
