"""Top-down floor-plan rendering to SVG.

Objects are the only <rect> elements (one per placed object); the room,
doors, swing clearances, and windows render as <polygon> so consumers can
count object rectangles directly.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .arranging import blocks_from_room
from .pipeline import LayoutOutcome

GROUP_PALETTE = [
    "#4e79a7",
    "#f28e2b",
    "#59a14f",
    "#e15759",
    "#b07aa1",
    "#76b7b2",
    "#edc948",
    "#ff9da7",
    "#9c755f",
    "#bab0ac",
]

_SCALE = 60  # px per meter


def _points(points) -> str:
    return " ".join(f"{x * _SCALE:.2f},{z * _SCALE:.2f}" for x, z in points)


def render_floor_plan(outcome: LayoutOutcome) -> str:
    scene = outcome.scene
    polygon = list(scene.room.inner_polygon)
    xs = [p[0] for p in polygon]
    zs = [p[1] for p in polygon]
    margin = 0.5
    min_x, min_z = min(xs) - margin, min(zs) - margin
    width = (max(xs) - min(xs) + 2 * margin) * _SCALE
    height = (max(zs) - min(zs) + 2 * margin) * _SCALE

    group_of_object = {}
    for group in outcome.grouping.groups:
        for idx in group.member_indexes():
            group_of_object[idx] = group.group_id
    placed_ids = {g.group_id for g, _ in outcome.placement.placed}

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{min_x * _SCALE:.2f} '
        f'{min_z * _SCALE:.2f} {width:.2f} {height:.2f}">',
        f'<polygon class="room" points="{_points(polygon)}" fill="#fafaf7" '
        'stroke="#333" stroke-width="3"/>',
    ]
    for block in blocks_from_room(scene.room):
        cls = block.kind
        color = "#8a5a2b" if block.kind == "door" else "#7ab3d9"
        parts.append(
            f'<polygon class="{cls}" points="{_points(block.rect.corners())}" '
            f'fill="{color}" fill-opacity="0.8"/>'
        )
        if block.clearance is not None:
            parts.append(
                f'<polygon class="door-swing" points="{_points(block.clearance.corners())}" '
                'fill="none" stroke="#8a5a2b" stroke-dasharray="4 3"/>'
            )

    # The output scene lists only placed objects; index lookup goes through
    # the original request indexes recorded on the groups.
    placed_indexes = sorted(
        idx
        for g, _ in outcome.placement.placed
        for idx in g.member_indexes()
    )
    for obj, request_index in zip(scene.objects, placed_indexes):
        inst = scene.catalog.get(obj.instance_id)
        t = obj.transform
        gid = group_of_object.get(request_index, 0)
        color = GROUP_PALETTE[gid % len(GROUP_PALETTE)]
        deg = math.degrees(t.theta)
        parts.append(
            f'<rect class="object group-{gid}" x="{-inst.width / 2 * _SCALE:.2f}" '
            f'y="{-inst.depth / 2 * _SCALE:.2f}" width="{inst.width * _SCALE:.2f}" '
            f'height="{inst.depth * _SCALE:.2f}" fill="{color}" fill-opacity="0.85" '
            f'stroke="#222" transform="translate({t.x * _SCALE:.2f} {t.z * _SCALE:.2f}) '
            f'rotate({deg:.2f})"><title>{escape(obj.instance_id)}</title></rect>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
