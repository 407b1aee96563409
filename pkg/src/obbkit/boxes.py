"""Oriented bounding boxes: long-edge and rotation-reference conventions,
angle normalization, corner/box conversions, and the side-distance
regression encoding.

Conventions fixed here and relied on everywhere else:
  * long-edge boxes store (cx, cy, w, h, theta) with h >= w and theta the
    angle of the long edge against the x-axis, in [-pi/2, pi/2);
  * the box frame is u = (cos t, sin t) along the long edge and
    v = (-sin t, cos t) across it;
  * in the regression encoding, l/r are distances to the sides crossed by
    -u/+u and t/b the distances to the sides crossed by -v/+v.
"""

import math
from dataclasses import dataclass

from .errors import DomainError, GeometryError

HALF_PI = math.pi / 2.0

# Relative tolerance below which w and h count as equal (square tie-break).
SQUARE_RTOL = 1e-9
# Relative tolerance for accepting a corner quad as an exact rectangle.
RECT_RTOL = 1e-6


def normalize_angle_le(theta: float) -> float:
    """Map an angle to the long-edge range [-pi/2, pi/2) modulo pi."""
    if not math.isfinite(theta):
        raise DomainError(f"angle must be finite, got {theta}")
    r = math.remainder(theta, math.pi)
    if r >= HALF_PI:
        r -= math.pi
    return r


@dataclass(frozen=True)
class OrientedBoxLE:
    """Long-edge rotated box: h is the long edge, theta its angle."""

    cx: float
    cy: float
    w: float
    h: float
    theta: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.cx, self.cy, self.w, self.h, self.theta)):
            raise DomainError("box fields must be finite")
        if self.w <= 0.0 or self.h <= 0.0:
            raise DomainError(f"box dims must be positive, got w={self.w}, h={self.h}")
        if self.h < self.w * (1.0 - SQUARE_RTOL):
            raise DomainError(f"long-edge box needs h >= w, got w={self.w}, h={self.h}")
        if not (-HALF_PI <= self.theta < HALF_PI):
            raise DomainError(f"theta must lie in [-pi/2, pi/2), got {self.theta}")


@dataclass(frozen=True)
class OrientedBoxOC:
    """Rotation-reference box: h_oc is the edge at angle theta_oc in [-pi/2, 0).

    The reference edge may be the long or the short one, so two boxes that
    cover the same pixels can disagree on (w_oc, h_oc) pairing.
    """

    cx: float
    cy: float
    w_oc: float
    h_oc: float
    theta_oc: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in
                   (self.cx, self.cy, self.w_oc, self.h_oc, self.theta_oc)):
            raise DomainError("box fields must be finite")
        if self.w_oc <= 0.0 or self.h_oc <= 0.0:
            raise DomainError("box dims must be positive")
        if not (-HALF_PI <= self.theta_oc < 0.0):
            raise DomainError(f"theta_oc must lie in [-pi/2, 0), got {self.theta_oc}")


@dataclass(frozen=True)
class RegressionVector:
    """Sample point plus its four side distances in the rotated frame."""

    px: float
    py: float
    t: float
    b: float
    l: float
    r: float
    theta: float

    def __post_init__(self):
        vals = (self.px, self.py, self.t, self.b, self.l, self.r, self.theta)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("regression fields must be finite")
        if min(self.t, self.b, self.l, self.r) < 0.0:
            raise DomainError("side distances must be non-negative")
        if self.t + self.b <= 0.0 or self.l + self.r <= 0.0:
            raise DomainError("box extents must be positive")


@dataclass(frozen=True)
class ConvexPolygon:
    """Counter-clockwise convex polygon with at least 3 vertices."""

    vertices: tuple

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise GeometryError(f"polygon needs >= 3 vertices, got {len(verts)}")
        if not all(math.isfinite(x) and math.isfinite(y) for x, y in verts):
            raise GeometryError("polygon vertices must be finite")
        if self.signed_area() <= 0.0:
            raise GeometryError("polygon must be counter-clockwise with positive area")
        n = len(verts)
        for i in range(n):
            ax, ay = verts[i]
            bx, by = verts[(i + 1) % n]
            cx, cy = verts[(i + 2) % n]
            cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
            scale = math.hypot(bx - ax, by - ay) * math.hypot(cx - ax, cy - ay)
            if cross < -1e-9 * max(scale, 1.0):
                raise GeometryError("polygon is not convex")

    def signed_area(self) -> float:
        acc = 0.0
        verts = self.vertices
        n = len(verts)
        for i in range(n):
            x0, y0 = verts[i]
            x1, y1 = verts[(i + 1) % n]
            acc += x0 * y1 - x1 * y0
        return 0.5 * acc


def canonicalize_le(cx: float, cy: float, w: float, h: float, theta: float) -> OrientedBoxLE:
    """Build a canonical long-edge box from raw fields, swapping dims and
    rotating the angle label by pi/2 when h < w. Corners are unchanged.
    """
    if not all(math.isfinite(v) for v in (cx, cy, w, h, theta)):
        raise DomainError("box fields must be finite")
    if w <= 0.0 or h <= 0.0:
        raise DomainError(f"box dims must be positive, got w={w}, h={h}")
    theta = normalize_angle_le(theta)
    if h < w and abs(h - w) > SQUARE_RTOL * max(h, w):
        w, h = h, w
        theta = normalize_angle_le(theta + HALF_PI)
    return OrientedBoxLE(cx, cy, w, h, theta)


def _axes(theta: float):
    u = (math.cos(theta), math.sin(theta))
    return u, (-u[1], u[0])


def le_to_corners(box: OrientedBoxLE) -> ConvexPolygon:
    """Four CCW corners c +- (h/2) u +- (w/2) v."""
    u, v = _axes(box.theta)
    hu = 0.5 * box.h
    hv = 0.5 * box.w
    cx, cy = box.cx, box.cy
    return ConvexPolygon((
        (cx + hu * u[0] + hv * v[0], cy + hu * u[1] + hv * v[1]),
        (cx - hu * u[0] + hv * v[0], cy - hu * u[1] + hv * v[1]),
        (cx - hu * u[0] - hv * v[0], cy - hu * u[1] - hv * v[1]),
        (cx + hu * u[0] - hv * v[0], cy + hu * u[1] - hv * v[1]),
    ))


def convex_hull(points) -> list:
    """Strict convex hull (CCW, no collinear vertices) by monotone chain."""
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) < 3:
        return pts

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                ox, oy = out[-2]
                ax, ay = out[-1]
                if (ax - ox) * (p[1] - oy) - (ay - oy) * (p[0] - ox) <= 0.0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    return hull if len(hull) >= 3 else pts[:2]


def min_area_rect(points) -> OrientedBoxLE:
    """Minimum-area enclosing rectangle via rotating calipers over the hull."""
    hull = convex_hull(points)
    if len(hull) < 3:
        raise GeometryError("points are collinear; no enclosing rectangle")
    best = None
    n = len(hull)
    for i in range(n):
        x0, y0 = hull[i]
        x1, y1 = hull[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        norm = math.hypot(ex, ey)
        dx, dy = ex / norm, ey / norm
        proj_d = [px * dx + py * dy for px, py in hull]
        proj_n = [-px * dy + py * dx for px, py in hull]
        lo_d, hi_d = min(proj_d), max(proj_d)
        lo_n, hi_n = min(proj_n), max(proj_n)
        area = (hi_d - lo_d) * (hi_n - lo_n)
        if best is None or area < best[0]:
            best = (area, dx, dy, lo_d, hi_d, lo_n, hi_n)
    _, dx, dy, lo_d, hi_d, lo_n, hi_n = best
    md, mn = 0.5 * (lo_d + hi_d), 0.5 * (lo_n + hi_n)
    cx = md * dx - mn * dy
    cy = md * dy + mn * dx
    ext_d = hi_d - lo_d
    ext_n = hi_n - lo_n
    if ext_d <= 0.0 or ext_n <= 0.0:
        raise GeometryError("degenerate point set")
    if ext_d >= ext_n:
        return OrientedBoxLE(cx, cy, ext_n, ext_d, normalize_angle_le(math.atan2(dy, dx)))
    return OrientedBoxLE(cx, cy, ext_d, ext_n, normalize_angle_le(math.atan2(dx, -dy)))


def corners_to_le(quad) -> OrientedBoxLE:
    """Recover a canonical box from 4 corner points.

    An exact rectangle (opposite edges equal and adjacent edges
    perpendicular, to RECT_RTOL) is inverted directly; anything else gets
    its minimum-area enclosing rectangle.
    """
    pts = [(float(x), float(y)) for x, y in quad]
    if len(pts) != 4:
        raise GeometryError(f"expected 4 corner points, got {len(pts)}")
    if not all(math.isfinite(x) and math.isfinite(y) for x, y in pts):
        raise GeometryError("corner coordinates must be finite")

    edges = [(pts[(i + 1) % 4][0] - pts[i][0], pts[(i + 1) % 4][1] - pts[i][1])
             for i in range(4)]
    lens = [math.hypot(ex, ey) for ex, ey in edges]
    scale = max(lens)
    if scale <= 0.0:
        raise GeometryError("degenerate corner quad")
    opp0 = math.hypot(edges[0][0] + edges[2][0], edges[0][1] + edges[2][1])
    opp1 = math.hypot(edges[1][0] + edges[3][0], edges[1][1] + edges[3][1])
    dot = abs(edges[0][0] * edges[1][0] + edges[0][1] * edges[1][1])
    is_rect = (min(lens) > 0.0
               and opp0 <= RECT_RTOL * scale
               and opp1 <= RECT_RTOL * scale
               and dot <= RECT_RTOL * lens[0] * lens[1])
    if is_rect:
        cx = sum(p[0] for p in pts) / 4.0
        cy = sum(p[1] for p in pts) / 4.0
        len0 = 0.5 * (lens[0] + lens[2])
        len1 = 0.5 * (lens[1] + lens[3])
        if len0 >= len1:
            long_edge, h, w = edges[0], len0, len1
        else:
            long_edge, h, w = edges[1], len1, len0
        theta = normalize_angle_le(math.atan2(long_edge[1], long_edge[0]))
        return OrientedBoxLE(cx, cy, w, h, theta)
    return min_area_rect(pts)


def le_to_oc(box: OrientedBoxLE) -> OrientedBoxOC:
    """Convert to the rotation-reference convention; corner set is preserved.

    Angles already in [-pi/2, 0) keep the long edge as reference; otherwise
    the short edge becomes the reference and the angle shifts by -pi/2.
    """
    if box.theta < 0.0:
        return OrientedBoxOC(box.cx, box.cy, box.w, box.h, box.theta)
    return OrientedBoxOC(box.cx, box.cy, box.h, box.w, box.theta - HALF_PI)


def oc_to_le(box: OrientedBoxOC) -> OrientedBoxLE:
    """Inverse of le_to_oc; output is canonical. Squares keep theta_oc."""
    if box.h_oc >= box.w_oc:
        return OrientedBoxLE(box.cx, box.cy, box.w_oc, box.h_oc, box.theta_oc)
    return OrientedBoxLE(box.cx, box.cy, box.h_oc, box.w_oc,
                         normalize_angle_le(box.theta_oc + HALF_PI))


def regression_to_box(rv: RegressionVector) -> OrientedBoxLE:
    """Decode a side-distance vector into a canonical box."""
    u, v = _axes(rv.theta)
    du = 0.5 * (rv.r - rv.l)
    dv = 0.5 * (rv.b - rv.t)
    cx = rv.px + du * u[0] + dv * v[0]
    cy = rv.py + du * u[1] + dv * v[1]
    ext_u = rv.l + rv.r
    ext_v = rv.t + rv.b
    if ext_u <= 0.0 or ext_v <= 0.0:
        raise GeometryError("regression vector has zero extent")
    return canonicalize_le(cx, cy, ext_v, ext_u, rv.theta)


def box_to_regression(box: OrientedBoxLE, px: float, py: float) -> RegressionVector:
    """Encode the four side distances of (px, py); the point must be strictly
    inside the box.
    """
    u, v = _axes(box.theta)
    dx, dy = px - box.cx, py - box.cy
    pu = dx * u[0] + dy * u[1]
    pv = dx * v[0] + dy * v[1]
    r = 0.5 * box.h - pu
    l = 0.5 * box.h + pu
    b = 0.5 * box.w - pv
    t = 0.5 * box.w + pv
    if min(t, b, l, r) <= 0.0:
        raise DomainError(f"point ({px}, {py}) is not strictly inside the box")
    return RegressionVector(px, py, t, b, l, r, box.theta)


def aspect_ratio(box: OrientedBoxLE) -> float:
    """Long edge over short edge, >= 1 for canonical boxes."""
    return box.h / box.w
