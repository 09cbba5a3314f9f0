"""Coherent grouping: split a layout request into relation-connected groups,
pick one dominant per secondary, and lay each group out internally from
hyper-relations, pattern chains, or pairwise priors.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Optional

from .chains import chain_transforms, generate_chain_set
from .extraction import PairwiseRelation
from .geometry import OrientedRect
from .hyper import HyperKey, HyperScheduler
from .scene import IDENTITY, Catalog, PlacedObject, Scene, Transform, world_footprint

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroupingConfig:
    p_wall_affine: float = 0.8
    p_wall_default: float = 0.3


@dataclass
class RelationGraph:
    vertices: list[PlacedObject]
    edges: set[tuple[int, int]]  # (dominant index, secondary index)

    def parents_of(self, v: int) -> list[int]:
        return sorted(u for (u, w) in self.edges if w == v)


@dataclass
class AssignmentTree:
    root: int
    children: dict[int, list[int]] = field(default_factory=dict)

    def nodes(self) -> list[int]:
        out = []
        stack = [self.root]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.children.get(v, [])))
        return out


@dataclass
class GroupMember:
    object_index: int
    instance_id: str
    source: str  # root | hyper | chain | pairwise
    local: Transform


@dataclass
class CoherentGroup:
    """A relation-connected set of objects laid out around its dominant root,
    reduced to one bounding cuboid for placement. Member transforms are
    relative to the cuboid's plan center; the group faces local +z."""

    group_id: int
    root_index: int
    members: list[GroupMember]
    width: float
    depth: float
    height: float
    base_elevation: float = 0.0
    lifting: float = 0.0
    wall_mounted: bool = False
    tier: str = "floor"

    def area(self) -> float:
        return self.width * self.depth

    def rect_at(self, t: Transform) -> OrientedRect:
        return OrientedRect(t.x, t.z, self.width, self.depth, t.theta)

    def top(self) -> float:
        return self.base_elevation + self.height

    def member_indexes(self) -> list[int]:
        return [m.object_index for m in self.members]


def build_relation_graph(
    objects: list[PlacedObject], catalog: Catalog, store
) -> RelationGraph:
    """Edge (a -> b) whenever a is dominant-capable and the store holds a
    pairwise relation from a's instance to b's instance."""
    edges: set[tuple[int, int]] = set()
    memo: dict[tuple[str, str], bool] = {}
    for i, a in enumerate(objects):
        if a.instance_id not in catalog or not catalog.get(a.instance_id).dominant_capable:
            continue
        for j, b in enumerate(objects):
            if i == j:
                continue
            pair = (a.instance_id, b.instance_id)
            if pair not in memo:
                memo[pair] = store.load_pairwise(*pair) is not None
            if memo[pair]:
                edges.add((i, j))
    return RelationGraph(vertices=list(objects), edges=edges)


def coherent_components(graph: RelationGraph) -> list[list[int]]:
    """Maximal connected components (edges taken undirected), each sorted,
    ordered by smallest member index. Singletons allowed."""
    n = len(graph.vertices)
    neighbors: dict[int, set[int]] = {i: set() for i in range(n)}
    for a, b in graph.edges:
        neighbors[a].add(b)
        neighbors[b].add(a)
    seen: set[int] = set()
    components = []
    for start in range(n):
        if start in seen:
            continue
        stack = [start]
        comp = []
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            comp.append(v)
            stack.extend(neighbors[v] - seen)
        components.append(sorted(comp))
    return components


def _chain_capacity(store, dominant_id: str, secondary_id: str) -> int:
    relation = store.load_pairwise(dominant_id, secondary_id)
    if relation is None:
        return 1
    chains = store.load_chains(dominant_id, secondary_id, relation.content_hash())
    if chains is None or not chains.chains:
        return 1
    return chains.max_length()


def assign_dominants(
    component: list[int],
    graph: RelationGraph,
    store,
    rng: random.Random,
) -> list[AssignmentTree]:
    """Give each secondary exactly one dominant, uniformly among candidates
    with remaining capacity (capacity = longest pattern chain for that
    secondary instance, 1 without chains). Secondaries left without a viable
    candidate split off; the result is a forest."""
    parent: dict[int, int] = {}
    children: dict[int, list[int]] = {}
    capacity: dict[tuple[int, str], int] = {}

    def remaining(u: int, sid: str) -> int:
        key = (u, sid)
        if key not in capacity:
            capacity[key] = _chain_capacity(
                store, graph.vertices[u].instance_id, sid
            )
        return capacity[key]

    def would_cycle(u: int, v: int) -> bool:
        w: Optional[int] = u
        while w is not None:
            if w == v:
                return True
            w = parent.get(w)
        return False

    for v in component:
        sid = graph.vertices[v].instance_id
        candidates = [
            u
            for u in component
            if (u, v) in graph.edges and remaining(u, sid) > 0 and not would_cycle(u, v)
        ]
        if not candidates:
            continue
        u = candidates[rng.randrange(len(candidates))]
        parent[v] = u
        capacity[(u, sid)] -= 1
        children.setdefault(u, []).append(v)

    def subtree_children(root: int) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        stack = [root]
        while stack:
            v = stack.pop()
            kids = children.get(v)
            if kids:
                out[v] = list(kids)
                stack.extend(kids)
        return out

    roots = [v for v in component if v not in parent]
    return [AssignmentTree(root=r, children=subtree_children(r)) for r in roots]


class _StoreViews:
    """Store access for instantiation, with chain regeneration on staleness."""

    def __init__(self, store, catalog: Catalog):
        self.store = store
        self.catalog = catalog

    def relation(self, dom: str, sec: str) -> Optional[PairwiseRelation]:
        return self.store.load_pairwise(dom, sec)

    def chains(self, relation: PairwiseRelation):
        cs = self.store.load_chains(
            relation.dominant_id, relation.secondary_id, relation.content_hash()
        )
        if cs is None:
            # Regenerate with a relation-derived seed so the rebuild is
            # reproducible regardless of the requesting seed.
            seed = int(relation.content_hash()[:16], 16)
            cs = generate_chain_set(relation, self.catalog, random.Random(seed))
            self.store.save_chains(cs)
        return cs


def instantiate_group(
    tree: AssignmentTree,
    objects: list[PlacedObject],
    catalog: Catalog,
    store,
    scheduler: Optional[HyperScheduler],
    rng: random.Random,
) -> tuple[list[GroupMember], list[str], list[AssignmentTree]]:
    """Assign a local transform to every reachable tree member.

    Returns (members, hyper statuses seen, detached subtrees). Children whose
    priors are missing detach with their subtrees and become new trees.
    """
    views = _StoreViews(store, catalog)
    local: dict[int, Transform] = {tree.root: IDENTITY}
    members = [
        GroupMember(tree.root, objects[tree.root].instance_id, "root", IDENTITY)
    ]
    statuses: list[str] = []
    detached: list[AssignmentTree] = []
    queue = [tree.root]
    while queue:
        p = queue.pop(0)
        kids = tree.children.get(p, [])
        if not kids:
            continue
        p_id = objects[p].instance_id
        by_instance: dict[str, list[int]] = {}
        for c in kids:
            by_instance.setdefault(objects[c].instance_id, []).append(c)

        child_pose: dict[int, Transform] = {}
        pending_groups = dict(by_instance)

        if len(by_instance) >= 2 and scheduler is not None:
            key = HyperKey.from_counts(p_id, {sid: len(v) for sid, v in by_instance.items()})
            relation = scheduler.request(key)
            statuses.append(relation.status)
            if relation.status == "complete" and relation.priors:
                prior = relation.priors[rng.randrange(len(relation.priors))]
                slot_iter = iter(key.slots())
                for sid, _count in key.secondaries:
                    for c in by_instance[sid]:
                        slot, slot_sid = next(slot_iter)
                        assert slot_sid == sid
                        child_pose[c] = prior.pose_of(slot)
                pending_groups = {}
                source_by_child = {c: "hyper" for c in kids}
            else:
                source_by_child = {}
        else:
            source_by_child = {}

        for sid, group_kids in pending_groups.items():
            relation = views.relation(p_id, sid)
            if relation is None or not relation.priors:
                logger.warning(
                    "no prior for %s|%s; detaching %d object(s) into singleton groups",
                    p_id,
                    sid,
                    len(group_kids),
                )
                for c in group_kids:
                    detached.append(_subtree(tree, c))
                continue
            if len(group_kids) >= 2:
                cs = views.chains(relation)
                qualifying = [c for c in cs.chains if len(c) >= len(group_kids)]
                if not qualifying:
                    longest = cs.max_length()
                    qualifying = [c for c in cs.chains if len(c) == longest]
                chain = qualifying[rng.randrange(len(qualifying))]
                prefix = chain[: len(group_kids)]
                transforms = chain_transforms(relation, cs, chain, catalog)[: len(prefix)]
                for c, t in zip(group_kids, transforms):
                    child_pose[c] = t
                    source_by_child[c] = "chain"
                for c in group_kids[len(transforms):]:
                    detached.append(_subtree(tree, c))
            else:
                c = group_kids[0]
                child_pose[c] = relation.priors[rng.randrange(len(relation.priors))]
                source_by_child[c] = "pairwise"

        for c in kids:
            if c not in child_pose:
                continue
            local[c] = local[p].compose(child_pose[c])
            members.append(
                GroupMember(c, objects[c].instance_id, source_by_child.get(c, "pairwise"), local[c])
            )
            queue.append(c)
    return members, statuses, detached


def _subtree(tree: AssignmentTree, root: int) -> AssignmentTree:
    children: dict[int, list[int]] = {}
    stack = [root]
    while stack:
        v = stack.pop()
        kids = tree.children.get(v, [])
        if kids:
            children[v] = list(kids)
            stack.extend(kids)
    return AssignmentTree(root=root, children=children)


def _finish_group(
    group_id: int,
    members: list[GroupMember],
    root_index: int,
    objects: list[PlacedObject],
    catalog: Catalog,
    rng: random.Random,
    room_span: float,
    config: GroupingConfig,
) -> CoherentGroup:
    """Bound the members with a plan cuboid, recenter their transforms on it,
    and draw the group's wall lifting."""
    minx = minz = float("inf")
    maxx = maxz = float("-inf")
    base = float("inf")
    top = float("-inf")
    root_inst = catalog.get(objects[root_index].instance_id)
    wall_single = len(members) == 1 and root_inst.wall_mounted
    for m in members:
        inst = catalog.get(m.instance_id)
        y = root_inst.mount_elevation if wall_single else m.local.y
        rect = world_footprint(PlacedObject(m.instance_id, m.local), catalog)
        for cx, cz in rect.corners():
            minx, maxx = min(minx, cx), max(maxx, cx)
            minz, maxz = min(minz, cz), max(maxz, cz)
        base = min(base, y)
        top = max(top, y + inst.height)
    cx = (minx + maxx) / 2.0
    cz = (minz + maxz) / 2.0
    recentered = []
    for m in members:
        y = m.local.y
        if wall_single:
            y = root_inst.mount_elevation
        recentered.append(
            GroupMember(
                m.object_index,
                m.instance_id,
                m.source,
                Transform(m.local.x - cx, y, m.local.z - cz, m.local.theta),
            )
        )

    if wall_single:
        lifting = 0.0
    else:
        p_wall = config.p_wall_affine if root_inst.wall_affine else config.p_wall_default
        if rng.random() < p_wall:
            lifting = 0.0
        else:
            lifting = rng.uniform(0.0, room_span / 2.0)
    return CoherentGroup(
        group_id=group_id,
        root_index=root_index,
        members=recentered,
        width=maxx - minx,
        depth=maxz - minz,
        height=top - base,
        base_elevation=base,
        lifting=lifting,
        wall_mounted=wall_single,
        tier=root_inst.tier,
    )


@dataclass
class GroupingOutcome:
    groups: list[CoherentGroup]
    hyper_statuses: list[str]
    warnings: list[str] = field(default_factory=list)

    def aggregate_hyper_status(self) -> str:
        if any(s == "generating" for s in self.hyper_statuses):
            return "pending"
        if any(s == "failed" for s in self.hyper_statuses):
            return "failed"
        return "complete"


def build_groups(
    scene: Scene,
    catalog: Catalog,
    store,
    scheduler: Optional[HyperScheduler],
    rng: random.Random,
    config: GroupingConfig = GroupingConfig(),
) -> GroupingOutcome:
    """Full grouping pass over a layout request."""
    from .geometry import polygon_bbox

    minx, minz, maxx, maxz = polygon_bbox(list(scene.room.inner_polygon))
    room_span = min(maxx - minx, maxz - minz)

    graph = build_relation_graph(scene.objects, catalog, store)
    groups: list[CoherentGroup] = []
    statuses: list[str] = []
    next_id = 0
    for component in coherent_components(graph):
        trees = assign_dominants(component, graph, store, rng)
        pending = list(trees)
        while pending:
            tree = pending.pop(0)
            members, tree_statuses, detached = instantiate_group(
                tree, scene.objects, catalog, store, scheduler, rng
            )
            statuses.extend(tree_statuses)
            pending.extend(detached)
            groups.append(
                _finish_group(
                    next_id,
                    members,
                    tree.root,
                    scene.objects,
                    catalog,
                    rng,
                    room_span,
                    config,
                )
            )
            next_id += 1
    return GroupingOutcome(groups=groups, hyper_statuses=statuses)
