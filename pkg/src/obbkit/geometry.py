"""Exact rotated-box overlap via convex polygon clipping, and greedy
rotated non-maximum suppression.
"""

import math

from .boxes import ConvexPolygon, OrientedBoxLE, le_to_corners
from .errors import GeometryError

# Points within this distance of a clip edge count as inside.
EDGE_EPS = 1e-9
# Output vertices closer than this are merged.
MERGE_EPS = 1e-9


def polygon_area(poly: ConvexPolygon) -> float:
    """Shoelace area of a CCW convex polygon."""
    if len(poly.vertices) < 3:
        raise GeometryError("area needs >= 3 vertices")
    return poly.signed_area()


def _clip_vertices(subject, clip):
    """Sutherland-Hodgman core on raw vertex lists; returns a vertex list."""
    output = list(subject)
    n_clip = len(clip)
    for i in range(n_clip):
        if not output:
            return []
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n_clip]
        ex, ey = bx - ax, by - ay
        elen = math.hypot(ex, ey)
        bound = -EDGE_EPS * elen
        inputs = output
        output = []
        sx, sy = inputs[-1]
        s_in = ex * (sy - ay) - ey * (sx - ax) >= bound
        for px, py in inputs:
            p_in = ex * (py - ay) - ey * (px - ax) >= bound
            if p_in != s_in:
                # Segment crosses the clip line; insert the intersection.
                dx, dy = px - sx, py - sy
                denom = ex * dy - ey * dx
                if denom != 0.0:
                    s = (ex * (ay - sy) - ey * (ax - sx)) / denom
                    output.append((sx + s * dx, sy + s * dy))
            if p_in:
                output.append((px, py))
            sx, sy, s_in = px, py, p_in
    return output


def _dedupe(vertices):
    out = []
    for x, y in vertices:
        if out and abs(x - out[-1][0]) <= MERGE_EPS and abs(y - out[-1][1]) <= MERGE_EPS:
            continue
        out.append((x, y))
    if len(out) >= 2 and abs(out[0][0] - out[-1][0]) <= MERGE_EPS \
            and abs(out[0][1] - out[-1][1]) <= MERGE_EPS:
        out.pop()
    return out


def clip_convex(subject: ConvexPolygon, clip: ConvexPolygon):
    """Intersection of two convex polygons (CCW), or None when empty."""
    verts = _dedupe(_clip_vertices(subject.vertices, clip.vertices))
    if len(verts) < 3:
        return None
    acc = 0.0
    n = len(verts)
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        acc += x0 * y1 - x1 * y0
    if acc <= 0.0:
        return None
    return ConvexPolygon(tuple(verts))


def _intersection_area(a: ConvexPolygon, b: ConvexPolygon) -> float:
    inter = clip_convex(a, b)
    return polygon_area(inter) if inter is not None else 0.0


def skew_iou(a: OrientedBoxLE, b: OrientedBoxLE) -> float:
    """Exact IoU of two rotated boxes by polygon clipping; in [0, 1]."""
    # Evaluate in a canonical argument order so iou(a, b) == iou(b, a)
    # bit-for-bit despite the asymmetry of the clipping pass.
    ka = (a.cx, a.cy, a.w, a.h, a.theta)
    kb = (b.cx, b.cy, b.w, b.h, b.theta)
    if kb < ka:
        a, b = b, a
    pa = le_to_corners(a)
    pb = le_to_corners(b)
    area_a = polygon_area(pa)
    area_b = polygon_area(pb)
    inter = min(_intersection_area(pa, pb), area_a, area_b)
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def rotated_nms(dets, iou_thresh: float, class_aware: bool = True) -> list:
    """Greedy NMS over scored detections, returning kept indices by
    descending score (score ties keep input order).

    A detection is kept iff its overlap with every already-kept detection
    of the same class stays below ``iou_thresh``. ``dets`` may be any
    objects with ``box``, ``score`` and ``class_id`` attributes.
    """
    if not (0.0 < iou_thresh <= 1.0):
        raise GeometryError(f"iou_thresh must be in (0, 1], got {iou_thresh}")
    for d in dets:
        if not math.isfinite(d.score):
            raise GeometryError("detection scores must be finite")
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    kept = []
    for i in order:
        ok = True
        for j in kept:
            if class_aware and dets[j].class_id != dets[i].class_id:
                continue
            if skew_iou(dets[i].box, dets[j].box) >= iou_thresh:
                ok = False
                break
        if ok:
            kept.append(i)
    return kept
