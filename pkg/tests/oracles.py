"""Independent reference implementations used to verify the library.

Everything here is deliberately written against different machinery than the
production code: plain-Python loops for DPC, shapely for geometry, a
union-find for components, and exhaustive product enumeration for joint
assignments. None of it imports the algorithms it checks.
"""

from __future__ import annotations

import itertools
import math

from shapely.geometry import Point, Polygon

# Mirrors the shipped tier configuration (contract-level, not code reuse).
PASSABLE_TIER_PAIRS = {frozenset(("carpet", "floor")), frozenset(("floor", "surface"))}


# -- DPC ------------------------------------------------------------------------


def brute_pose_distance(a, b, angle_weight: float) -> float:
    dth = (a[3] - b[3] + math.pi) % (2 * math.pi) - math.pi
    return math.sqrt(
        (a[0] - b[0]) ** 2
        + (a[1] - b[1]) ** 2
        + (a[2] - b[2]) ** 2
        + (angle_weight * dth) ** 2
    )


def brute_dpc(points: list[tuple], angle_weight: float, d_c: float | None = None):
    """O(K^2) loop reimplementation of the density/separation scores.

    points are (x, y, z, theta) tuples. Returns (rho, delta, d_c). Delta is
    assigned in descending-rho order (ties by index): minimum distance to an
    earlier point, with the first point taking its own maximum distance.
    """
    k = len(points)
    dist = [[0.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            d = brute_pose_distance(points[i], points[j], angle_weight)
            dist[i][j] = d
            dist[j][i] = d
    if d_c is None:
        ordered = sorted(dist[i][j] for i in range(k) for j in range(k) if i != j)
        order = math.ceil(0.015 * k * k)
        order = min(max(order, 1), k * (k - 1))
        d_c = ordered[order - 1]
    rho = [sum(1 for j in range(k) if j != i and dist[i][j] <= d_c) for i in range(k)]
    visit = sorted(range(k), key=lambda i: (-rho[i], i))
    delta = [0.0] * k
    delta[visit[0]] = max(dist[visit[0]])
    for pos in range(1, k):
        i = visit[pos]
        delta[i] = min(dist[i][j] for j in visit[:pos])
    return rho, delta, d_c


# -- geometry (shapely-backed) ----------------------------------------------------


def rect_polygon(cx: float, cz: float, w: float, d: float, theta: float) -> Polygon:
    c, s = math.cos(theta), math.sin(theta)
    corners = []
    for lx, lz in ((w / 2, d / 2), (-w / 2, d / 2), (-w / 2, -d / 2), (w / 2, -d / 2)):
        corners.append((cx + lx * c - lz * s, cz + lx * s + lz * c))
    return Polygon(corners)


def rect_poly_from(rect) -> Polygon:
    return rect_polygon(rect.cx, rect.cz, rect.w, rect.d, rect.theta)


def overlap_area(rect_a, rect_b) -> float:
    return rect_poly_from(rect_a).intersection(rect_poly_from(rect_b)).area


def rect_within_polygon(rect, polygon_points, tol: float = 0.0) -> bool:
    room = Polygon(polygon_points)
    if tol > 0.0:
        room = room.buffer(tol, join_style=2)
    return room.contains(rect_poly_from(rect))


# -- graphs -----------------------------------------------------------------------


def union_find_components(n: int, edges) -> list[frozenset]:
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in edges:
        parent[find(a)] = find(b)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), set()).add(i)
    return [frozenset(g) for g in groups.values()]


# -- tier collisions / joint assignments ---------------------------------------------


def bodies_collide(rect_a, tier_a, y_a, rect_b, tier_b, y_b, heights) -> bool:
    """Independent restatement of the tier collision rule."""
    if tier_a != tier_b and frozenset((tier_a, tier_b)) in PASSABLE_TIER_PAIRS:
        return False
    top_a = y_a + heights[0]
    top_b = y_b + heights[1]
    if max(y_a, y_b) >= min(top_a, top_b):
        return False
    return overlap_area(rect_a, rect_b) >= 1e-6


def exhaustive_hyper_assignments(key, relations, catalog) -> set:
    """Every collision-free joint assignment, canonicalized so permutations of
    identical copies compare equal. Returns a set of nested pose tuples."""
    slot_ids = [sid for sid, count in key.secondaries for _ in range(count)]
    prior_lists = [relations[sid].priors for sid in slot_ids]
    valid = set()
    for combo in itertools.product(*prior_lists):
        ok = True
        for i in range(len(combo)):
            for j in range(i + 1, len(combo)):
                inst_i = catalog.get(slot_ids[i])
                inst_j = catalog.get(slot_ids[j])
                ri = rect_polygon_args(combo[i], inst_i)
                rj = rect_polygon_args(combo[j], inst_j)
                if bodies_collide(
                    ri,
                    inst_i.tier,
                    combo[i].y,
                    rj,
                    inst_j.tier,
                    combo[j].y,
                    (inst_i.height, inst_j.height),
                ):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            valid.add(canonical_assignment(key, list(combo)))
    return valid


class _Rect:
    def __init__(self, cx, cz, w, d, theta):
        self.cx, self.cz, self.w, self.d, self.theta = cx, cz, w, d, theta


def rect_polygon_args(pose, inst) -> _Rect:
    return _Rect(pose.x, pose.z, inst.width, inst.depth, pose.theta)


def canonical_assignment(key, poses_by_slot) -> tuple:
    """Round poses and sort identical-copy blocks so assignment sets compare
    permutation-insensitively."""
    out = []
    start = 0
    for sid, count in key.secondaries:
        block = [poses_by_slot[s] for s in range(start, start + count)]
        block.sort(key=lambda t: (t.x, t.y, t.z, t.theta))
        out.extend(
            (round(t.x, 6), round(t.y, 6), round(t.z, 6), round(t.theta, 6)) for t in block
        )
        start += count
    return tuple(out)


def canonical_hyper_prior(key, prior) -> tuple:
    poses = [t for _, t in sorted(prior.poses)]
    return canonical_assignment(key, poses)


# -- placement constraint oracle --------------------------------------------------------


def placement_violations(outcome, catalog) -> list[str]:
    """Check every placed group rectangle against the three layout constraints
    plus the window sill rule, using shapely only."""
    scene = outcome.scene
    room = Polygon(list(scene.room.inner_polygon))
    room_with_slack = room.buffer(0.011, join_style=2)
    problems = []

    group_rects = []
    for group, t in outcome.placement.placed:
        poly = rect_polygon(t.x, t.z, group.width, group.depth, t.theta)
        group_rects.append((group, poly))

    for group, poly in group_rects:
        if not room_with_slack.contains(poly):
            problems.append(f"group {group.group_id} not inside the room polygon")

    for i in range(len(group_rects)):
        for j in range(i + 1, len(group_rects)):
            gi, pi = group_rects[i]
            gj, pj = group_rects[j]
            if gi.tier != gj.tier and frozenset((gi.tier, gj.tier)) in PASSABLE_TIER_PAIRS:
                continue
            if max(gi.base_elevation, gj.base_elevation) >= min(gi.top(), gj.top()):
                continue
            if pi.intersection(pj).area >= 1e-6:
                problems.append(f"groups {gi.group_id} and {gj.group_id} overlap")

    for door in scene.room.doors:
        door_poly = rect_polygon(
            door.rect.cx, door.rect.cz, door.rect.w, door.rect.d, door.rect.theta
        )
        c, s = math.cos(door.rect.theta), math.sin(door.rect.theta)
        swing = door.swing_depth
        clearance = None
        for sign in (1, -1):
            px = door.rect.cx + sign * -s * (door.rect.d / 2 + swing / 2)
            pz = door.rect.cz + sign * c * (door.rect.d / 2 + swing / 2)
            if room.contains(Point(px, pz)):
                clearance = rect_polygon(px, pz, door.rect.w, swing, door.rect.theta)
                break
        for group, poly in group_rects:
            if poly.intersection(door_poly).area >= 1e-6:
                problems.append(f"group {group.group_id} blocks door")
            if clearance is not None and poly.intersection(clearance).area >= 1e-6:
                problems.append(f"group {group.group_id} blocks door clearance")

    for window in scene.room.windows:
        win_poly = rect_polygon(
            window.rect.cx, window.rect.cz, window.rect.w, window.rect.d, window.rect.theta
        )
        for group, poly in group_rects:
            if poly.intersection(win_poly).area >= 1e-6 and group.top() > window.sill_height:
                problems.append(
                    f"group {group.group_id} (top {group.top():.2f}) blocks window "
                    f"with sill {window.sill_height:.2f}"
                )
    return problems
