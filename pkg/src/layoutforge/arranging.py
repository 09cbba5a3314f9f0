"""Geometric arranging: place coherent-group cuboids inside the room polygon.

Groups are processed largest-first. Each gets heuristic poses (room corners,
wall midpoints, sides of already placed groups) and then rounds of random
wall poses at exponentially growing density; the first pose passing the
constraint check wins, and a group with no valid pose is discarded. Doors
and windows act as fixed blocks, with windows passable for furniture below
their sill.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from typing import Optional

from .geometry import (
    OVERLAP_EPS,
    OrientedRect,
    point_in_polygon,
    rect_inside_polygon,
    rects_collide,
)
from .grouping import CoherentGroup
from .hyper import TieredFootprint, tier_collides
from .scene import RoomEnvelope, Transform

logger = logging.getLogger(__name__)

CONTAINMENT_TOL = 0.01  # 1 cm inward slack against float-edge rejections


@dataclass(frozen=True)
class Block:
    rect: OrientedRect
    kind: str  # door | window
    blocking_height: float
    clearance: Optional[OrientedRect] = None


@dataclass
class GroupStats:
    group_id: int
    candidates_tried: int = 0
    densification_rounds: int = 0
    placed: bool = False


@dataclass
class PlacementResult:
    placed: list[tuple[CoherentGroup, Transform]] = field(default_factory=list)
    discarded: list[tuple[CoherentGroup, str]] = field(default_factory=list)
    stats: list[GroupStats] = field(default_factory=list)

    def object_transforms(self) -> dict[int, Transform]:
        """World pose per original object index, groups composed onto members."""
        out: dict[int, Transform] = {}
        for group, t in self.placed:
            for m in group.members:
                out[m.object_index] = t.compose(m.local)
        return out


@dataclass(frozen=True)
class ArrangeConfig:
    n_max: int = 7
    door_clearance_scale: float = 1.0
    containment_tol: float = CONTAINMENT_TOL


def _inward_normal(a: tuple[float, float], b: tuple[float, float]) -> tuple[float, float]:
    # Left normal of a CCW polygon edge points into the room.
    dx, dz = b[0] - a[0], b[1] - a[1]
    length = math.hypot(dx, dz)
    return (-dz / length, dx / length)


def _facing(normal: tuple[float, float]) -> float:
    # theta that rotates local +z onto the given direction.
    return math.atan2(-normal[0], normal[1])


def blocks_from_room(room: RoomEnvelope, clearance_scale: float = 1.0) -> list[Block]:
    polygon = list(room.inner_polygon)
    blocks = []
    for door in room.doors:
        r = door.rect
        c, s = math.cos(r.theta), math.sin(r.theta)
        z_axis = (-s, c)
        swing = door.swing_depth * clearance_scale
        clearance = None
        if swing > 0:
            # Extrude toward whichever side of the door lies inside the room.
            for direction in (z_axis, (-z_axis[0], -z_axis[1])):
                px = r.cx + direction[0] * (r.d / 2 + swing / 2)
                pz = r.cz + direction[1] * (r.d / 2 + swing / 2)
                if point_in_polygon(px, pz, polygon):
                    clearance = OrientedRect(px, pz, r.w, swing, r.theta)
                    break
        blocks.append(Block(rect=r, kind="door", blocking_height=math.inf, clearance=clearance))
    for window in room.windows:
        blocks.append(
            Block(rect=window.rect, kind="window", blocking_height=window.sill_height)
        )
    return blocks


def sort_groups(groups: list[CoherentGroup]) -> list[CoherentGroup]:
    """Largest plan area first; equal areas keep creation order."""
    return sorted(groups, key=lambda g: (-g.area(), g.group_id))


def _group_body(group: CoherentGroup, t: Transform) -> TieredFootprint:
    return TieredFootprint(
        rect=group.rect_at(t),
        tier=group.tier,
        bottom=group.base_elevation,
        top=group.top(),
    )


def check_ok(
    group: CoherentGroup,
    t: Transform,
    placed: list[tuple[CoherentGroup, Transform]],
    blocks: list[Block],
    room: RoomEnvelope,
    containment_tol: float = CONTAINMENT_TOL,
) -> bool:
    """The three placement constraints: inside the room, clear of placed
    groups (tier and height aware), clear of door blocks and their swing;
    window overlap only for groups not rising above the sill."""
    rect = group.rect_at(t)
    if not rect_inside_polygon(rect, list(room.inner_polygon), tol=containment_tol):
        return False
    body = _group_body(group, t)
    for other, ot in placed:
        if tier_collides(body, _group_body(other, ot)):
            return False
    for block in blocks:
        if block.kind == "door":
            if rects_collide(rect, block.rect, OVERLAP_EPS):
                return False
            if block.clearance is not None and rects_collide(rect, block.clearance, OVERLAP_EPS):
                return False
        else:
            if group.top() > block.blocking_height and rects_collide(rect, block.rect, OVERLAP_EPS):
                return False
    return True


def _corner_candidates(group: CoherentGroup, polygon: list[tuple[float, float]]) -> list[Transform]:
    n = len(polygon)
    poses = []
    for i in range(n):
        prev_v = polygon[(i - 1) % n]
        v = polygon[i]
        next_v = polygon[(i + 1) % n]
        ax, az = v[0] - prev_v[0], v[1] - prev_v[1]
        bx, bz = next_v[0] - v[0], next_v[1] - v[1]
        # Reflex corners produce a pose too; containment filters it later.
        len_in = math.hypot(ax, az)
        len_out = math.hypot(bx, bz)
        n_in = _inward_normal(prev_v, v)
        n_out = _inward_normal(v, next_v)
        # Back faces the longer wall; tie goes to the earlier edge.
        if len_out > len_in:
            back, side = n_out, n_in
        else:
            back, side = n_in, n_out
        cx = v[0] + back[0] * group.depth / 2 + side[0] * group.width / 2
        cz = v[1] + back[1] * group.depth / 2 + side[1] * group.width / 2
        poses.append(Transform(cx, 0.0, cz, _facing(back)))
    return poses


def _edge_pose(
    group: CoherentGroup,
    a: tuple[float, float],
    b: tuple[float, float],
    s: float,
    lifting: float,
) -> Transform:
    normal = _inward_normal(a, b)
    px = a[0] + (b[0] - a[0]) * s
    pz = a[1] + (b[1] - a[1]) * s
    offset = group.depth / 2 + lifting
    return Transform(px + normal[0] * offset, 0.0, pz + normal[1] * offset, _facing(normal))


def heuristic_candidates(
    group: CoherentGroup,
    room: RoomEnvelope,
    placed: list[tuple[CoherentGroup, Transform]],
) -> list[Transform]:
    """Corner poses, wall-midpoint poses (lifted by the group's L_f), then
    poses flush against each side of every placed group."""
    polygon = list(room.inner_polygon)
    lifting = 0.0 if group.wall_mounted else group.lifting
    poses: list[Transform] = []
    if not group.wall_mounted:
        poses.extend(_corner_candidates(group, polygon))
    n = len(polygon)
    for i in range(n):
        poses.append(_edge_pose(group, polygon[i], polygon[(i + 1) % n], 0.5, lifting))
    if not group.wall_mounted:
        for other, t in placed:
            c, s = math.cos(t.theta), math.sin(t.theta)
            x_axis, z_axis = (c, s), (-s, c)
            for axis, span_other, span_self in (
                (x_axis, other.width, group.width),
                (z_axis, other.depth, group.depth),
            ):
                for sign in (1.0, -1.0):
                    gap = span_other / 2 + span_self / 2
                    poses.append(
                        Transform(
                            t.x + sign * axis[0] * gap,
                            0.0,
                            t.z + sign * axis[1] * gap,
                            t.theta,
                        )
                    )
    return poses


def random_candidates(
    group: CoherentGroup,
    room: RoomEnvelope,
    densification_round: int,
    rng: random.Random,
) -> list[Transform]:
    """ceil(2^n * edge length) uniform wall poses per polygon edge, shuffled."""
    if densification_round < 1:
        raise ValueError("densification_round starts at 1")
    polygon = list(room.inner_polygon)
    lifting = 0.0 if group.wall_mounted else group.lifting
    poses: list[Transform] = []
    n = len(polygon)
    for i in range(n):
        a, b = polygon[i], polygon[(i + 1) % n]
        count = math.ceil((2 ** densification_round) * math.hypot(b[0] - a[0], b[1] - a[1]))
        for _ in range(count):
            poses.append(_edge_pose(group, a, b, rng.random(), lifting))
    rng.shuffle(poses)
    return poses


def insert_rectangle(
    group: CoherentGroup,
    room: RoomEnvelope,
    placed: list[tuple[CoherentGroup, Transform]],
    blocks: list[Block],
    rng: random.Random,
    n_max: int = 7,
    containment_tol: float = CONTAINMENT_TOL,
) -> tuple[Optional[Transform], GroupStats]:
    """First valid pose among heuristics then densifying random rounds."""
    stats = GroupStats(group_id=group.group_id)
    for t in heuristic_candidates(group, room, placed):
        stats.candidates_tried += 1
        if check_ok(group, t, placed, blocks, room, containment_tol):
            stats.placed = True
            return t, stats
    for n in range(1, n_max + 1):
        stats.densification_rounds = n
        for t in random_candidates(group, room, n, rng):
            stats.candidates_tried += 1
            if check_ok(group, t, placed, blocks, room, containment_tol):
                stats.placed = True
                return t, stats
    return None, stats


def arrange_scene(
    groups: list[CoherentGroup],
    room: RoomEnvelope,
    rng: random.Random,
    config: ArrangeConfig = ArrangeConfig(),
) -> PlacementResult:
    """Algorithm main loop: sort by area, insert each group, discard failures."""
    blocks = blocks_from_room(room, config.door_clearance_scale)
    result = PlacementResult()
    for group in sort_groups(groups):
        t, stats = insert_rectangle(
            group, room, result.placed, blocks, rng, config.n_max, config.containment_tol
        )
        result.stats.append(stats)
        if t is None:
            result.discarded.append((group, "no collision-free pose within sampling budget"))
            logger.info("discarding group %d (area %.2f m^2)", group.group_id, group.area())
        else:
            result.placed.append((group, t))
    return result
