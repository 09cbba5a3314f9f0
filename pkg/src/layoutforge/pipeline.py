"""End-to-end pipelines shared by the CLI and the HTTP service."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Optional

from .arranging import ArrangeConfig, PlacementResult, arrange_scene
from .chains import generate_chain_set
from .extraction import ExtractionParams, extract_pairwise_relations
from .grouping import CoherentGroup, GroupingConfig, GroupingOutcome, build_groups
from .hyper import HyperScheduler
from .scene import Catalog, Scene, scene_to_json, with_transforms
from .store import PriorStore

logger = logging.getLogger(__name__)


def chain_seed(relation_hash: str) -> int:
    """Chain generation seed derived from the relation content, so a rebuild
    of the same relation always yields the same chains."""
    return int(relation_hash[:16], 16)


def extract_to_store(
    corpus: list[Scene],
    store: PriorStore,
    params: ExtractionParams = ExtractionParams(),
    align: bool = True,
) -> dict:
    """Extract pairwise relations from the corpus, precompute their pattern
    chains, persist everything, and return a summary report."""
    catalog = Catalog()
    for scene in corpus:
        catalog.merge(scene.catalog)
    per_pair: dict = {}
    relations = extract_pairwise_relations(corpus, catalog, params, report=per_pair)
    total_priors = 0
    for key in sorted(relations):
        relation = relations[key]
        store.save_pairwise(relation)
        chain_set = generate_chain_set(
            relation, catalog, random.Random(chain_seed(relation.content_hash())), aligned=align
        )
        store.save_chains(chain_set)
        total_priors += len(relation.priors)
    raw = sum(v["raw"] for v in per_pair.values())
    kept = sum(v["kept"] for v in per_pair.values())
    return {
        "scenes": len(corpus),
        "relations": len(relations),
        "priors": total_priors,
        "rawSamples": raw,
        "removedSamples": raw - kept,
        "removalRate": (raw - kept) / raw if raw else 0.0,
    }


@dataclass(frozen=True)
class LayoutSettings:
    seed: int = 0
    n_max: int = 7
    p_wall_affine: float = 0.8
    p_wall_default: float = 0.3
    door_clearance_scale: float = 1.0

    @classmethod
    def from_config(cls, doc: dict, seed: int) -> "LayoutSettings":
        return cls(
            seed=seed,
            n_max=int(doc.get("nMax", 7)),
            p_wall_affine=float(doc.get("pWallAffine", 0.8)),
            p_wall_default=float(doc.get("pWallDefault", 0.3)),
            door_clearance_scale=float(doc.get("doorClearanceScale", 1.0)),
        )


@dataclass
class LayoutOutcome:
    scene: Scene
    grouping: GroupingOutcome
    placement: PlacementResult
    seed: int

    @property
    def hyper_status(self) -> str:
        return self.grouping.aggregate_hyper_status()


def layout_scene(
    scene: Scene,
    store: PriorStore,
    scheduler: Optional[HyperScheduler],
    settings: LayoutSettings = LayoutSettings(),
) -> LayoutOutcome:
    """Group the request's objects, arrange the groups, and propagate poses."""
    rng = random.Random(settings.seed)
    grouping = build_groups(
        scene,
        scene.catalog,
        store,
        scheduler,
        rng,
        GroupingConfig(
            p_wall_affine=settings.p_wall_affine, p_wall_default=settings.p_wall_default
        ),
    )
    placement = arrange_scene(
        grouping.groups,
        scene.room,
        rng,
        ArrangeConfig(
            n_max=settings.n_max, door_clearance_scale=settings.door_clearance_scale
        ),
    )
    placed_scene = with_transforms(scene, placement.object_transforms())
    return LayoutOutcome(scene=placed_scene, grouping=grouping, placement=placement, seed=settings.seed)


def _group_doc(group: CoherentGroup, transform=None) -> dict:
    doc = {
        "id": group.group_id,
        "root": group.root_index,
        "members": group.member_indexes(),
        "instanceIds": [m.instance_id for m in group.members],
        "sources": [m.source for m in group.members],
        "w": group.width,
        "d": group.depth,
        "h": group.height,
        "lifting": group.lifting,
        "wallMounted": group.wall_mounted,
    }
    doc["transform"] = transform.to_json() if transform is not None else None
    return doc


def outcome_to_json(outcome: LayoutOutcome) -> dict:
    placed_ids = {g.group_id: t for g, t in outcome.placement.placed}
    groups = []
    for group in outcome.grouping.groups:
        groups.append(_group_doc(group, placed_ids.get(group.group_id)))
    return {
        "scene": scene_to_json(outcome.scene),
        "groups": groups,
        "discards": [
            {"id": g.group_id, "members": g.member_indexes(), "reason": reason}
            for g, reason in outcome.placement.discarded
        ],
        "stats": [
            {
                "groupId": s.group_id,
                "candidatesTried": s.candidates_tried,
                "densificationRounds": s.densification_rounds,
                "placed": s.placed,
            }
            for s in outcome.placement.stats
        ],
        "hyperStatus": outcome.hyper_status,
        "seed": outcome.seed,
    }
