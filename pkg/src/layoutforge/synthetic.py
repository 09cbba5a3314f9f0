"""Synthetic scene corpora with known ground truth.

The generator writes fully placed scenes built from a fixed instance catalog
and hand-picked relative poses, optionally salted with uniform noise poses.
Ground truth stays available to callers, which makes recovery measurable:
extraction should reproduce the relative poses and denoising should drop
exactly the injected noise.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .scene import (
    Catalog,
    Door,
    ObjectInstance,
    PlacedObject,
    RoomEnvelope,
    Scene,
    Transform,
    Window,
)
from .geometry import OrientedRect, normalize_angle

PI = math.pi
HALF_PI = math.pi / 2


_INSTANCES = [
    ObjectInstance("dining_table_oak", 1.6, 0.9, 0.75, "floor", dominant_capable=True),
    ObjectInstance("chair_walnut", 0.45, 0.45, 0.9, "floor"),
    ObjectInstance("coffee_table_glass", 1.0, 0.6, 0.4, "floor", dominant_capable=True),
    ObjectInstance("sofa_gray", 1.8, 0.85, 0.8, "floor"),
    ObjectInstance(
        "tvstand_low", 1.5, 0.45, 0.5, "floor", dominant_capable=True, wall_affine=True
    ),
    ObjectInstance("tv_55", 1.25, 0.1, 0.75, "surface"),
    ObjectInstance("rug_wool", 2.4, 1.6, 0.02, "carpet"),
    ObjectInstance("bed_queen", 1.6, 2.0, 0.5, "floor", dominant_capable=True, wall_affine=True),
    ObjectInstance("nightstand_oak", 0.45, 0.4, 0.55, "floor"),
    ObjectInstance("wardrobe_pine", 1.2, 0.6, 2.0, "floor", wall_affine=True),
    ObjectInstance("desk_white", 1.2, 0.6, 0.75, "floor", dominant_capable=True),
    ObjectInstance(
        "frame_abstract", 0.8, 0.06, 0.6, "wall-mounted", wall_mounted=True, mount_elevation=1.5
    ),
    ObjectInstance("cabinet_low", 1.0, 0.4, 0.4, "floor"),
]


def fixture_catalog() -> Catalog:
    catalog = Catalog()
    for inst in _INSTANCES:
        catalog.add(inst)
    return catalog


# Relative poses (secondary in the dominant's frame) the corpus is built from.
GROUND_TRUTH: dict[tuple[str, str], list[Transform]] = {
    ("dining_table_oak", "chair_walnut"): [
        Transform(0.0, 0.0, 0.725, PI),
        Transform(0.0, 0.0, -0.725, 0.0),
        Transform(1.075, 0.0, 0.0, HALF_PI),
        Transform(-1.075, 0.0, 0.0, -HALF_PI),
    ],
    ("coffee_table_glass", "sofa_gray"): [
        Transform(0.0, 0.0, 1.025, PI),
        Transform(0.0, 0.0, -1.025, 0.0),
    ],
    ("coffee_table_glass", "tvstand_low"): [
        Transform(0.0, 0.0, -1.825, 0.0),
        Transform(0.0, 0.0, 1.825, PI),
    ],
    ("coffee_table_glass", "rug_wool"): [
        Transform(0.0, 0.0, 0.0, 0.0),
    ],
    ("tvstand_low", "tv_55"): [
        Transform(0.0, 0.5, 0.0, 0.0),
    ],
    ("bed_queen", "nightstand_oak"): [
        Transform(1.075, 0.0, -0.75, 0.0),
        Transform(-1.075, 0.0, -0.75, 0.0),
    ],
    ("desk_white", "chair_walnut"): [
        Transform(0.0, 0.0, 0.575, PI),
    ],
}


def _place(anchor: Transform, rel: Transform) -> Transform:
    return anchor.compose(rel)


def _jittered(t: Transform, rng: random.Random, jitter: float) -> Transform:
    """Ground-truth pose nudged along x by a snapped offset. Designers place
    repeated arrangements on a grid, so corpora carry exact pose repeats;
    density scoring relies on those ties."""
    if jitter <= 0:
        return t
    return Transform(t.x + rng.choice((-jitter, 0.0, jitter)), t.y, t.z, t.theta)


def _noise_pose(rng: random.Random, truths: list[Transform], min_gap: float = 0.5) -> Transform:
    """Uniform pose kept clear of every ground-truth pose so recovery tests
    can treat it as a definite outlier."""
    while True:
        t = Transform(
            rng.uniform(-2.2, 2.2), 0.0, rng.uniform(-2.2, 2.2), rng.uniform(-PI, PI)
        )
        if all(math.hypot(t.x - g.x, t.z - g.z) > min_gap for g in truths):
            return t


@dataclass
class CorpusParams:
    n_scenes: int = 50
    noise_rate: float = 0.05  # chance per scene and relation of one outlier sample
    jitter: float = 0.02
    seed: int = 7


def _anchor_pose(rng: random.Random, cx: float, cz: float) -> Transform:
    # Axis-aligned anchors: dominant furniture sits parallel to walls, and the
    # exact quarter-turns keep repeated relative poses bit-identical.
    theta = rng.choice([0.0, HALF_PI, PI, -HALF_PI])
    return Transform(
        cx + rng.uniform(-0.4, 0.4), 0.0, cz + rng.uniform(-0.4, 0.4), normalize_angle(theta)
    )


def make_corpus(params: CorpusParams = CorpusParams()) -> list[Scene]:
    """Deterministic corpus: each scene places a dining set, a living set, a
    bedroom set, and a desk far apart in one large room, each at a random
    anchor pose, with ground-truth relative poses under small jitter and
    noise_rate extra secondaries at uniform outlier poses."""
    rng = random.Random(params.seed)
    catalog = fixture_catalog()
    scenes = []
    room = RoomEnvelope(
        inner_polygon=((0.0, 0.0), (22.0, 0.0), (22.0, 16.0), (0.0, 16.0)),
    )
    anchors = {
        "dining_table_oak": (4.0, 4.0),
        "coffee_table_glass": (12.0, 4.0),
        "bed_queen": (4.0, 12.0),
        "desk_white": (12.0, 12.0),
    }
    set_members = {
        "dining_table_oak": [("chair_walnut", ("dining_table_oak", "chair_walnut"))],
        "coffee_table_glass": [
            ("sofa_gray", ("coffee_table_glass", "sofa_gray")),
            ("tvstand_low", ("coffee_table_glass", "tvstand_low")),
            ("rug_wool", ("coffee_table_glass", "rug_wool")),
        ],
        "bed_queen": [("nightstand_oak", ("bed_queen", "nightstand_oak"))],
        "desk_white": [("chair_walnut", ("desk_white", "chair_walnut"))],
    }
    for n in range(params.n_scenes):
        objects: list[PlacedObject] = []
        for dom_id, (cx, cz) in anchors.items():
            anchor = _anchor_pose(rng, cx, cz)
            objects.append(PlacedObject(dom_id, anchor.rounded()))
            for sec_id, key in set_members[dom_id]:
                truths = GROUND_TRUTH[key]
                if sec_id in ("chair_walnut", "nightstand_oak"):
                    picks = truths  # full arrangement every scene
                else:
                    picks = [truths[rng.randrange(len(truths))]]
                for rel in picks:
                    pose = _place(anchor, _jittered(rel, rng, params.jitter))
                    objects.append(PlacedObject(sec_id, pose.rounded()))
                if rng.random() < params.noise_rate:
                    noise = _place(anchor, _noise_pose(rng, truths))
                    objects.append(PlacedObject(sec_id, noise.rounded()))
            # TV rides on the stand whenever the stand is present.
            if dom_id == "coffee_table_glass":
                stand = next(
                    (o for o in reversed(objects) if o.instance_id == "tvstand_low"), None
                )
                if stand is not None:
                    tv = _place(
                        stand.transform,
                        _jittered(GROUND_TRUTH[("tvstand_low", "tv_55")][0], rng, params.jitter),
                    )
                    objects.append(PlacedObject("tv_55", tv.rounded()))
        scenes.append(
            Scene(scene_id=f"synthetic-{n:03d}", room=room, objects=objects, catalog=catalog)
        )
    return scenes


def fidelity_corpus(n_scenes: int = 50, seed: int = 31, noise_rate: float = 0.10) -> list[Scene]:
    """Corpus for recovery measurement: one dining table with chairs at the
    four ground-truth poses per scene, plus noise_rate chance per scene of a
    chair at a uniform outlier pose."""
    rng = random.Random(seed)
    catalog = fixture_catalog()
    room = RoomEnvelope(inner_polygon=((0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)))
    truths = GROUND_TRUTH[("dining_table_oak", "chair_walnut")]
    scenes = []
    for n in range(n_scenes):
        anchor = _anchor_pose(rng, 5.0, 5.0)
        objects = [PlacedObject("dining_table_oak", anchor.rounded())]
        for rel in truths:
            objects.append(
                PlacedObject("chair_walnut", _place(anchor, _jittered(rel, rng, 0.02)).rounded())
            )
        if rng.random() < noise_rate:
            objects.append(
                PlacedObject("chair_walnut", _place(anchor, _noise_pose(rng, truths)).rounded())
            )
        scenes.append(
            Scene(scene_id=f"fidelity-{n:03d}", room=room, objects=objects, catalog=catalog)
        )
    return scenes


# -- layout request fixtures ---------------------------------------------------


def _request_scene(
    scene_id: str,
    polygon: tuple,
    doors: tuple,
    windows: tuple,
    instance_ids: list[str],
) -> Scene:
    catalog = fixture_catalog()
    return Scene(
        scene_id=scene_id,
        room=RoomEnvelope(inner_polygon=polygon, doors=doors, windows=windows),
        objects=[PlacedObject(i, None) for i in instance_ids],
        catalog=catalog,
    )


def bedroom_request() -> Scene:
    """4x5 m bedroom: bed group (bed + 2 nightstands), wardrobe, desk + chair."""
    door = Door(rect=OrientedRect(1.0, 0.0, 0.9, 0.1, 0.0), swing_depth=0.9)
    window = Window(rect=OrientedRect(4.0, 2.5, 0.1, 1.2, 0.0), sill_height=0.9)
    return _request_scene(
        "bedroom",
        ((0.0, 0.0), (4.0, 0.0), (4.0, 5.0), (0.0, 5.0)),
        (door,),
        (window,),
        [
            "bed_queen",
            "nightstand_oak",
            "nightstand_oak",
            "wardrobe_pine",
            "desk_white",
            "chair_walnut",
        ],
    )


def living_dining_request() -> Scene:
    """Large combined room, 13 objects, at least 5 coherent groups."""
    door = Door(rect=OrientedRect(1.2, 0.0, 1.0, 0.1, 0.0), swing_depth=1.0)
    window = Window(rect=OrientedRect(8.0, 0.05, 0.1, 1.6, 0.0), sill_height=0.8)
    return _request_scene(
        "living-dining",
        ((0.0, 0.0), (8.0, 0.0), (8.0, 7.0), (0.0, 7.0)),
        (door,),
        (window,),
        [
            "dining_table_oak",
            "chair_walnut",
            "chair_walnut",
            "chair_walnut",
            "chair_walnut",
            "coffee_table_glass",
            "sofa_gray",
            "tvstand_low",
            "tv_55",
            "rug_wool",
            "wardrobe_pine",
            "cabinet_low",
            "frame_abstract",
        ],
    )


def crowded_request() -> Scene:
    """Small room whose object set cannot all fit: forces discards."""
    door = Door(rect=OrientedRect(0.9, 0.0, 0.8, 0.1, 0.0), swing_depth=0.8)
    return _request_scene(
        "crowded",
        ((0.0, 0.0), (3.6, 0.0), (3.6, 4.2), (0.0, 4.2)),
        (door,),
        (),
        [
            "bed_queen",
            "nightstand_oak",
            "nightstand_oak",
            "wardrobe_pine",
            "desk_white",
            "chair_walnut",
            "dining_table_oak",
            "chair_walnut",
            "chair_walnut",
            "cabinet_low",
            "wardrobe_pine",
        ],
    )
