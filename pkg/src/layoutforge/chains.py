"""Pre-computed pattern chains: mutually collision-free subsets of one
pairwise relation, so a dominant object can host several copies of the same
secondary (table with chairs) without re-checking pairs at layout time.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field

from .extraction import PairwiseRelation
from .geometry import OVERLAP_EPS, OrientedRect, normalize_angle, rects_collide, wrap_angle_diff
from .scene import Catalog, Transform

logger = logging.getLogger(__name__)

HALF_PI = math.pi / 2.0


@dataclass
class PatternChainSet:
    dominant_id: str
    secondary_id: str
    chains: list[list[int]]
    aligned: bool = True
    relation_hash: str = ""

    @property
    def key(self) -> str:
        return f"{self.dominant_id}|{self.secondary_id}"

    def max_length(self) -> int:
        return max((len(c) for c in self.chains), default=0)


def _secondary_rect(relation: PairwiseRelation, catalog: Catalog, t: Transform) -> OrientedRect:
    inst = catalog.get(relation.secondary_id)
    return OrientedRect(t.x, t.z, inst.width, inst.depth, t.theta)


def generate_chain(
    relation: PairwiseRelation,
    catalog: Catalog,
    start_index: int,
    rng: random.Random,
) -> list[int]:
    """Grow one chain from start_index: repeatedly pick a uniform random prior
    whose secondary copy clears every copy already in the chain, until none
    remains. The dominant sits at identity throughout."""
    if not 0 <= start_index < len(relation.priors):
        raise IndexError(f"start_index {start_index} out of range")
    rects = [_secondary_rect(relation, catalog, t) for t in relation.priors]
    chain = [start_index]
    while True:
        survivors = [
            i
            for i in range(len(rects))
            if i not in chain
            and all(not rects_collide(rects[i], rects[j], OVERLAP_EPS) for j in chain)
        ]
        if not survivors:
            return chain
        chain.append(survivors[rng.randrange(len(survivors))])


def generate_chain_set(
    relation: PairwiseRelation,
    catalog: Catalog,
    rng: random.Random,
    aligned: bool = True,
) -> PatternChainSet:
    """One chain per prior index (the k-th chain starts at prior k), so each
    prior is used by at least one chain without paying for the full O(n!) set."""
    if not relation.priors:
        raise ValueError("relation has no priors")
    chains = [generate_chain(relation, catalog, k, rng) for k in range(len(relation.priors))]
    return PatternChainSet(
        dominant_id=relation.dominant_id,
        secondary_id=relation.secondary_id,
        chains=chains,
        aligned=aligned,
        relation_hash=relation.content_hash(),
    )


def _collision_free(rects: list[OrientedRect]) -> bool:
    n = len(rects)
    for i in range(n):
        for j in range(i + 1, n):
            if rects_collide(rects[i], rects[j], OVERLAP_EPS):
                return False
    return True


def align_chain(
    relation: PairwiseRelation,
    chain: list[int],
    catalog: Catalog,
    snap_tolerance_m: float = 0.05,
    snap_tolerance_rad: float = 0.05,
) -> list[Transform]:
    """Tidied copies of the chained priors: angles near a quarter-turn grid
    snap onto it, near-equal x or z coordinates collapse to their mean. Any
    adjustment that would introduce a collision is reverted, so the result
    stays as sound as the input. Deterministic and idempotent."""
    poses = [relation.priors[i] for i in chain]

    def rects_of(ts: list[Transform]) -> list[OrientedRect]:
        return [_secondary_rect(relation, catalog, t) for t in ts]

    # Angle snapping, one pose at a time.
    for i, t in enumerate(poses):
        k = round(t.theta / HALF_PI)
        snapped = normalize_angle(k * HALF_PI)
        if snapped == t.theta or abs(wrap_angle_diff(t.theta - snapped)) >= snap_tolerance_rad:
            continue
        candidate = poses.copy()
        candidate[i] = Transform(t.x, t.y, t.z, snapped)
        if _collision_free(rects_of(candidate)):
            poses = candidate

    # Coordinate clustering per axis: union groups whose values sit within
    # tolerance of each other, then move each group to its mean.
    for axis in ("x", "z"):
        values = [getattr(t, axis) for t in poses]
        parent = list(range(len(poses)))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i in range(len(poses)):
            for j in range(i + 1, len(poses)):
                if abs(values[i] - values[j]) < snap_tolerance_m:
                    parent[find(i)] = find(j)
        groups: dict[int, list[int]] = {}
        for i in range(len(poses)):
            groups.setdefault(find(i), []).append(i)
        for members in groups.values():
            if len(members) < 2:
                continue
            mean = sum(values[i] for i in members) / len(members)
            if all(values[i] == mean for i in members):
                continue
            candidate = poses.copy()
            for i in members:
                t = candidate[i]
                if axis == "x":
                    candidate[i] = Transform(mean, t.y, t.z, t.theta)
                else:
                    candidate[i] = Transform(t.x, t.y, mean, t.theta)
            if _collision_free(rects_of(candidate)):
                poses = candidate

    return poses


def chain_transforms(
    relation: PairwiseRelation,
    chain_set: PatternChainSet,
    chain: list[int],
    catalog: Catalog,
) -> list[Transform]:
    """Transforms for a chain, aligned when the chain set says so."""
    if chain_set.aligned:
        return align_chain(relation, chain, catalog)
    return [relation.priors[i] for i in chain]
