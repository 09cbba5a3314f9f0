"""Scene data types and corpus ingestion.

Conventions: the object origin is the footprint center, the local front is
+z at theta = 0, lengths are meters and angles radians (scene files may
declare `"angleUnit": "deg"`). The floor plane is y = 0.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

from .geometry import (
    OrientedRect,
    is_simple_polygon,
    normalize_angle,
    polygon_area,
    rotate_xz,
)
from .jsonio import round_float

logger = logging.getLogger(__name__)

TIERS = ("carpet", "floor", "surface", "wall-mounted")


class SceneParseError(Exception):
    """Malformed scene document; message names the file and offending field."""


class SceneValidationError(Exception):
    """Structurally valid document that violates a scene invariant."""


class UnknownInstanceError(KeyError):
    """Lookup of an instance id absent from the catalog."""


@dataclass(frozen=True)
class Transform:
    """Pose: translation (x, y, z) plus rotation theta about the vertical axis."""

    x: float
    y: float
    z: float
    theta: float

    def __post_init__(self):
        for name in ("x", "y", "z", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite transform field {name!r}")
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def compose(self, local: "Transform") -> "Transform":
        """World pose of `local` expressed in this transform's frame."""
        dx, dz = rotate_xz(local.x, local.z, self.theta)
        return Transform(self.x + dx, self.y + local.y, self.z + dz, self.theta + local.theta)

    def rounded(self) -> "Transform":
        return Transform(
            round_float(self.x), round_float(self.y), round_float(self.z), round_float(self.theta)
        )

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "z": self.z, "theta": self.theta}


IDENTITY = Transform(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ObjectInstance:
    """Catalog entry for one concrete object instance (not a category)."""

    instance_id: str
    width: float
    depth: float
    height: float
    tier: str = "floor"
    dominant_capable: bool = False
    wall_mounted: bool = False
    mount_elevation: float = 0.0
    wall_affine: bool = False

    def __post_init__(self):
        if self.width <= 0 or self.depth <= 0 or self.height <= 0:
            raise ValueError(f"{self.instance_id}: footprint and height must be positive")
        if self.tier not in TIERS:
            raise ValueError(f"{self.instance_id}: unknown tier {self.tier!r}")
        if self.dominant_capable and self.tier not in ("floor", "surface"):
            raise ValueError(
                f"{self.instance_id}: dominant-capable objects must be floor or surface tier"
            )


@dataclass(frozen=True)
class PlacedObject:
    instance_id: str
    transform: Optional[Transform] = None


@dataclass(frozen=True)
class Door:
    rect: OrientedRect
    swing_depth: float


@dataclass(frozen=True)
class Window:
    rect: OrientedRect
    sill_height: float


@dataclass(frozen=True)
class RoomEnvelope:
    inner_polygon: tuple[tuple[float, float], ...]
    doors: tuple[Door, ...] = ()
    windows: tuple[Window, ...] = ()

    def validate(self) -> None:
        poly = list(self.inner_polygon)
        if not is_simple_polygon(poly):
            raise SceneValidationError("room polygon is not simple")
        if polygon_area(poly) <= 0:
            raise SceneValidationError("room polygon must be counter-clockwise with area > 0")


class Catalog:
    """Instance table keyed by instance id."""

    def __init__(self, instances: Optional[dict[str, ObjectInstance]] = None):
        self._instances: dict[str, ObjectInstance] = dict(instances or {})

    def add(self, inst: ObjectInstance) -> None:
        existing = self._instances.get(inst.instance_id)
        if existing is not None and existing != inst:
            logger.warning(
                "conflicting metadata for instance %s; keeping first definition", inst.instance_id
            )
            return
        self._instances[inst.instance_id] = inst

    def get(self, instance_id: str) -> ObjectInstance:
        try:
            return self._instances[instance_id]
        except KeyError:
            raise UnknownInstanceError(instance_id) from None

    def __contains__(self, instance_id: str) -> bool:
        return instance_id in self._instances

    def __iter__(self) -> Iterator[ObjectInstance]:
        return iter(self._instances.values())

    def __len__(self) -> int:
        return len(self._instances)

    def merge(self, other: "Catalog") -> None:
        for inst in other:
            self.add(inst)


@dataclass
class Scene:
    scene_id: str
    room: RoomEnvelope
    objects: list[PlacedObject] = field(default_factory=list)
    catalog: Catalog = field(default_factory=Catalog)

    def validate_as_corpus_example(self) -> None:
        self.room.validate()
        from .geometry import polygon_bbox

        minx, minz, maxx, maxz = polygon_bbox(list(self.room.inner_polygon))
        for i, obj in enumerate(self.objects):
            if obj.transform is None:
                raise SceneValidationError(f"object {i} ({obj.instance_id}) has no transform")
            t = obj.transform
            if not (minx - 1e-6 <= t.x <= maxx + 1e-6 and minz - 1e-6 <= t.z <= maxz + 1e-6):
                raise SceneValidationError(
                    f"object {i} ({obj.instance_id}) lies outside the room's bounding region"
                )


def world_footprint(obj: PlacedObject, catalog: Catalog) -> OrientedRect:
    """Footprint rectangle of a placed object in world (x, z) coordinates."""
    inst = catalog.get(obj.instance_id)
    if obj.transform is None:
        raise SceneValidationError(f"object {obj.instance_id} has no transform")
    t = obj.transform
    return OrientedRect(t.x, t.z, inst.width, inst.depth, t.theta)


def vertical_extent(obj: PlacedObject, catalog: Catalog) -> tuple[float, float]:
    """Half-open [bottom, top) interval occupied vertically by the object."""
    inst = catalog.get(obj.instance_id)
    base = obj.transform.y if obj.transform is not None else inst.mount_elevation
    return (base, base + inst.height)


# -- Scene JSON ---------------------------------------------------------------


def _angle(value: float, unit: str) -> float:
    return math.radians(value) if unit == "deg" else value


def _require(doc: dict, key: str, path: str, source: str):
    if key not in doc:
        raise SceneParseError(f"{source}: missing field {path}.{key}")
    return doc[key]


def _parse_rect(doc: dict, unit: str, path: str, source: str) -> OrientedRect:
    try:
        return OrientedRect(
            cx=float(_require(doc, "cx", path, source)),
            cz=float(_require(doc, "cz", path, source)),
            w=float(_require(doc, "w", path, source)),
            d=float(_require(doc, "d", path, source)),
            theta=normalize_angle(_angle(float(_require(doc, "theta", path, source)), unit)),
        )
    except (TypeError, ValueError) as e:
        raise SceneParseError(f"{source}: bad value in {path}: {e}") from e


def scene_from_json(doc: dict, source: str = "<memory>") -> Scene:
    if not isinstance(doc, dict):
        raise SceneParseError(f"{source}: top level must be an object")
    unit = doc.get("angleUnit", "rad")
    if unit not in ("rad", "deg"):
        raise SceneParseError(f"{source}: bad field angleUnit (expected 'rad' or 'deg')")
    scene_id = str(_require(doc, "id", "$", source))
    room_doc = _require(doc, "room", "$", source)
    floor = _require(room_doc, "floor", "room", source)
    if not isinstance(floor, list) or len(floor) < 3:
        raise SceneParseError(f"{source}: room.floor must list at least 3 vertices")
    try:
        polygon = tuple((float(p[0]), float(p[1])) for p in floor)
    except (TypeError, IndexError, ValueError) as e:
        raise SceneParseError(f"{source}: bad vertex in room.floor: {e}") from e

    doors = []
    for i, d in enumerate(room_doc.get("doors", [])):
        rect = _parse_rect(d, unit, f"room.doors[{i}]", source)
        swing = d.get("swingDepth")
        if swing is None:
            swing = max(rect.w, rect.d)
        doors.append(Door(rect=rect, swing_depth=float(swing)))
    windows = []
    for i, w in enumerate(room_doc.get("windows", [])):
        rect = _parse_rect(w, unit, f"room.windows[{i}]", source)
        windows.append(Window(rect=rect, sill_height=float(_require(w, "sill", f"room.windows[{i}]", source))))

    room = RoomEnvelope(inner_polygon=polygon, doors=tuple(doors), windows=tuple(windows))

    catalog = Catalog()
    objects: list[PlacedObject] = []
    for i, o in enumerate(doc.get("objects", [])):
        path = f"objects[{i}]"
        instance_id = str(_require(o, "instanceId", path, source))
        fp = _require(o, "footprint", path, source)
        try:
            inst = ObjectInstance(
                instance_id=instance_id,
                width=float(_require(fp, "w", f"{path}.footprint", source)),
                depth=float(_require(fp, "d", f"{path}.footprint", source)),
                height=float(_require(fp, "h", f"{path}.footprint", source)),
                tier=o.get("tier", "floor"),
                dominant_capable=bool(o.get("dominantCapable", False)),
                wall_mounted=bool(o.get("wallMounted", False)),
                mount_elevation=float(o.get("mountElevation", 0.0)),
                wall_affine=bool(o.get("wallAffine", False)),
            )
        except ValueError as e:
            raise SceneParseError(f"{source}: bad value in {path}: {e}") from e
        catalog.add(inst)
        t_doc = o.get("transform")
        transform = None
        if t_doc is not None:
            try:
                transform = Transform(
                    x=float(_require(t_doc, "x", f"{path}.transform", source)),
                    y=float(_require(t_doc, "y", f"{path}.transform", source)),
                    z=float(_require(t_doc, "z", f"{path}.transform", source)),
                    theta=_angle(float(_require(t_doc, "theta", f"{path}.transform", source)), unit),
                )
            except ValueError as e:
                raise SceneParseError(f"{source}: bad value in {path}.transform: {e}") from e
        objects.append(PlacedObject(instance_id=instance_id, transform=transform))

    return Scene(scene_id=scene_id, room=room, objects=objects, catalog=catalog)


def scene_to_json(scene: Scene) -> dict:
    """Scene document in the canonical (radian) format."""
    room = {
        "floor": [[x, z] for x, z in scene.room.inner_polygon],
        "doors": [
            {
                "cx": d.rect.cx,
                "cz": d.rect.cz,
                "w": d.rect.w,
                "d": d.rect.d,
                "theta": d.rect.theta,
                "swingDepth": d.swing_depth,
            }
            for d in scene.room.doors
        ],
        "windows": [
            {
                "cx": w.rect.cx,
                "cz": w.rect.cz,
                "w": w.rect.w,
                "d": w.rect.d,
                "theta": w.rect.theta,
                "sill": w.sill_height,
            }
            for w in scene.room.windows
        ],
    }
    objects = []
    for obj in scene.objects:
        inst = scene.catalog.get(obj.instance_id)
        entry = {
            "instanceId": obj.instance_id,
            "footprint": {"w": inst.width, "d": inst.depth, "h": inst.height},
            "tier": inst.tier,
            "dominantCapable": inst.dominant_capable,
            "wallMounted": inst.wall_mounted,
            "mountElevation": inst.mount_elevation,
            "transform": obj.transform.to_json() if obj.transform is not None else None,
        }
        if inst.wall_affine:
            entry["wallAffine"] = True
        objects.append(entry)
    return {"id": scene.scene_id, "room": room, "objects": objects}


def load_scene_file(path: str) -> Scene:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise SceneParseError(f"{path}: invalid JSON: {e}") from e
    return scene_from_json(doc, source=path)


def load_scene_corpus(path: str, require_transforms: bool = True) -> list[Scene]:
    """Load every parseable scene under `path` (a file or a directory).

    Scenes violating invariants are skipped with a warning; malformed JSON
    raises SceneParseError naming the file and field.
    """
    if os.path.isdir(path):
        files = sorted(
            os.path.join(path, name) for name in os.listdir(path) if name.endswith(".json")
        )
    else:
        files = [path]
    scenes = []
    for fp in files:
        scene = load_scene_file(fp)
        try:
            if require_transforms:
                scene.validate_as_corpus_example()
            else:
                scene.room.validate()
        except SceneValidationError as e:
            logger.warning("skipping scene %s (%s): %s", scene.scene_id, fp, e)
            continue
        scenes.append(scene)
    return scenes


def with_transforms(scene: Scene, placed: dict[int, Transform]) -> Scene:
    """Copy of the scene keeping only the objects in `placed`, transforms filled."""
    objects = [
        replace(scene.objects[i], transform=t.rounded()) for i, t in sorted(placed.items())
    ]
    return Scene(scene_id=scene.scene_id, room=scene.room, objects=objects, catalog=scene.catalog)
