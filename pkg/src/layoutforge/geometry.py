"""2D geometric primitives for the layout engine.

All plan-view geometry lives in the (x, z) plane; y is elevation. Rotation
follows x' = x*cos(t) - z*sin(t), z' = x*sin(t) + z*cos(t), so a positive
angle turns +x toward +z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

# Overlap smaller than this area does not count as a collision; absorbs
# floating-point jitter from rotated corners.
OVERLAP_EPS = 1e-6


def normalize_angle(theta: float) -> float:
    """Map an angle into the half-open interval [-pi, pi)."""
    t = math.fmod(theta + math.pi, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    return t - math.pi


def wrap_angle_diff(delta: float) -> float:
    """Smallest-magnitude representative of an angular difference, in [-pi, pi]."""
    return normalize_angle(delta)


def rotate_xz(x: float, z: float, theta: float) -> tuple[float, float]:
    c = math.cos(theta)
    s = math.sin(theta)
    return (x * c - z * s, x * s + z * c)


@dataclass(frozen=True)
class OrientedRect:
    """Rectangle with center (cx, cz), extents w along local x and d along
    local z, rotated by theta."""

    cx: float
    cz: float
    w: float
    d: float
    theta: float

    def corners(self) -> list[tuple[float, float]]:
        """Counter-clockwise corners starting at local (+w/2, +d/2)."""
        hw = self.w / 2.0
        hd = self.d / 2.0
        out = []
        for lx, lz in ((hw, hd), (-hw, hd), (-hw, -hd), (hw, -hd)):
            rx, rz = rotate_xz(lx, lz, self.theta)
            out.append((self.cx + rx, self.cz + rz))
        return out

    def axes(self) -> list[tuple[float, float]]:
        c = math.cos(self.theta)
        s = math.sin(self.theta)
        return [(c, s), (-s, c)]

    def area(self) -> float:
        return self.w * self.d

    def translated(self, dx: float, dz: float) -> "OrientedRect":
        return OrientedRect(self.cx + dx, self.cz + dz, self.w, self.d, self.theta)

    def shrunk(self, margin: float) -> "OrientedRect":
        return OrientedRect(
            self.cx,
            self.cz,
            max(self.w - 2.0 * margin, 0.0),
            max(self.d - 2.0 * margin, 0.0),
            self.theta,
        )


def _project(points: list[tuple[float, float]], axis: tuple[float, float]) -> tuple[float, float]:
    dots = [p[0] * axis[0] + p[1] * axis[1] for p in points]
    return min(dots), max(dots)


def rects_disjoint_sat(a: OrientedRect, b: OrientedRect) -> bool:
    """True when a separating axis exists (no overlap, touching allowed)."""
    ca = a.corners()
    cb = b.corners()
    for axis in a.axes() + b.axes():
        lo_a, hi_a = _project(ca, axis)
        lo_b, hi_b = _project(cb, axis)
        if hi_a < lo_b or hi_b < lo_a:
            return True
    return False


def convex_clip(subject: list[tuple[float, float]], clip: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Sutherland-Hodgman clip of a convex polygon against a convex CCW clip polygon."""
    output = list(subject)
    n = len(clip)
    for i in range(n):
        if not output:
            return []
        ax, az = clip[i]
        bx, bz = clip[(i + 1) % n]
        ex, ez = bx - ax, bz - az
        input_pts = output
        output = []
        m = len(input_pts)
        for j in range(m):
            px, pz = input_pts[j]
            qx, qz = input_pts[(j + 1) % m]
            p_in = ex * (pz - az) - ez * (px - ax) >= 0.0
            q_in = ex * (qz - az) - ez * (qx - ax) >= 0.0
            if p_in:
                output.append((px, pz))
                if not q_in:
                    output.append(_line_intersect(px, pz, qx, qz, ax, az, bx, bz))
            elif q_in:
                output.append(_line_intersect(px, pz, qx, qz, ax, az, bx, bz))
    return output


def _line_intersect(px, pz, qx, qz, ax, az, bx, bz) -> tuple[float, float]:
    # Intersection of segment pq with the infinite line ab.
    dx1, dz1 = qx - px, qz - pz
    dx2, dz2 = bx - ax, bz - az
    denom = dx1 * dz2 - dz1 * dx2
    if denom == 0.0:
        return (qx, qz)
    t = ((ax - px) * dz2 - (az - pz) * dx2) / denom
    return (px + t * dx1, pz + t * dz1)


def polygon_area(points: list[tuple[float, float]]) -> float:
    """Signed area; positive for counter-clockwise orientation."""
    total = 0.0
    n = len(points)
    for i in range(n):
        x1, z1 = points[i]
        x2, z2 = points[(i + 1) % n]
        total += x1 * z2 - x2 * z1
    return total / 2.0


def rect_intersection_area(a: OrientedRect, b: OrientedRect) -> float:
    if rects_disjoint_sat(a, b):
        return 0.0
    clipped = convex_clip(a.corners(), b.corners())
    if len(clipped) < 3:
        return 0.0
    return abs(polygon_area(clipped))


def rects_collide(a: OrientedRect, b: OrientedRect, eps: float = OVERLAP_EPS) -> bool:
    """Overlap test with an area tolerance: contact below eps is not a collision."""
    dx = a.cx - b.cx
    dz = a.cz - b.cz
    center_dist_sq = dx * dx + dz * dz
    outer = (math.hypot(a.w, a.d) + math.hypot(b.w, b.d)) / 2.0
    if center_dist_sq > outer * outer:
        return False
    if eps <= 1e-5:
        # Inscribed circles overlapping by >= 1 cm guarantee an intersection
        # area far above eps at any real object scale.
        inner = (min(a.w, a.d) + min(b.w, b.d)) / 2.0 - 0.01
        if inner > 0 and center_dist_sq < inner * inner:
            return True
    if rects_disjoint_sat(a, b):
        return False
    return rect_intersection_area(a, b) >= eps


def point_in_polygon(x: float, z: float, polygon: list[tuple[float, float]]) -> bool:
    """Ray-casting point test. Points exactly on an edge may land either way."""
    inside = False
    n = len(polygon)
    p1x, p1z = polygon[0]
    for i in range(1, n + 1):
        p2x, p2z = polygon[i % n]
        if (p1z > z) != (p2z > z):
            xi = (z - p1z) * (p2x - p1x) / (p2z - p1z) + p1x
            if x < xi:
                inside = not inside
        p1x, p1z = p2x, p2z
    return inside


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Proper segment intersection (shared endpoints/collinear touching excluded)."""

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    )


def rect_inside_polygon(rect: OrientedRect, polygon: list[tuple[float, float]], tol: float = 0.0) -> bool:
    """Containment check; `tol` shrinks the rectangle first so poses flush
    against a wall survive floating-point wobble."""
    r = rect.shrunk(tol) if tol > 0.0 else rect
    corners = r.corners()
    for cx, cz in corners:
        if not point_in_polygon(cx, cz, polygon):
            return False
    n = len(polygon)
    for i in range(4):
        a = corners[i]
        b = corners[(i + 1) % 4]
        for j in range(n):
            if segments_intersect(a, b, polygon[j], polygon[(j + 1) % n]):
                return False
    return True


def is_simple_polygon(points: list[tuple[float, float]]) -> bool:
    """Simple = no two non-adjacent edges intersect and no repeated vertices."""
    n = len(points)
    if n < 3:
        return False
    for i in range(n):
        if points[i] == points[(i + 1) % n]:
            return False
    for i in range(n):
        a1 = points[i]
        a2 = points[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if segments_intersect(a1, a2, points[j], points[(j + 1) % n]):
                return False
    return True


def polygon_bbox(points: list[tuple[float, float]]) -> tuple[float, float, float, float]:
    xs = [p[0] for p in points]
    zs = [p[1] for p in points]
    return min(xs), min(zs), max(xs), max(zs)


def vertical_extents_intersect(a0: float, a1: float, b0: float, b1: float) -> bool:
    """Half-open interval intersection: [a0, a1) against [b0, b1)."""
    return max(a0, b0) < min(a1, b1)
