"""Shared test helpers: random box generation, corner-set comparison, and
the Monte-Carlo IoU oracle used to cross-check the exact clipping path.
"""

import math

import numpy as np

from obbkit import OrientedBoxLE, canonicalize_le, le_to_corners


def random_box(rng, center_range=(0.0, 1000.0), dim_range=(1.0, 500.0)) -> OrientedBoxLE:
    cx, cy = rng.uniform(*center_range, size=2)
    d1, d2 = rng.uniform(*dim_range, size=2)
    theta = rng.uniform(-math.pi / 2, math.pi / 2)
    return canonicalize_le(cx, cy, min(d1, d2), max(d1, d2), theta)


def corner_set_deviation(box_a: OrientedBoxLE, box_b: OrientedBoxLE) -> float:
    """Max over corners of A of the distance to the nearest corner of B."""
    ca = le_to_corners(box_a).vertices
    cb = le_to_corners(box_b).vertices
    worst = 0.0
    for ax, ay in ca:
        best = min(math.hypot(ax - bx, ay - by) for bx, by in cb)
        worst = max(worst, best)
    return worst


def _inside_mask(box: OrientedBoxLE, xs, ys):
    u = (math.cos(box.theta), math.sin(box.theta))
    dx = xs - box.cx
    dy = ys - box.cy
    pu = dx * u[0] + dy * u[1]
    pv = -dx * u[1] + dy * u[0]
    return (np.abs(pu) <= box.h / 2.0) & (np.abs(pv) <= box.w / 2.0)


def mc_iou(box_a: OrientedBoxLE, box_b: OrientedBoxLE, n_samples: int,
           rng) -> float:
    """Monte-Carlo IoU estimate: uniform samples over the joint bounding
    rectangle; IoU = P(in both) / P(in either).
    """
    corners = list(le_to_corners(box_a).vertices) + list(le_to_corners(box_b).vertices)
    xs_min = min(c[0] for c in corners)
    xs_max = max(c[0] for c in corners)
    ys_min = min(c[1] for c in corners)
    ys_max = max(c[1] for c in corners)
    xs = rng.uniform(xs_min, xs_max, size=n_samples)
    ys = rng.uniform(ys_min, ys_max, size=n_samples)
    in_a = _inside_mask(box_a, xs, ys)
    in_b = _inside_mask(box_b, xs, ys)
    n_union = np.count_nonzero(in_a | in_b)
    if n_union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / n_union
