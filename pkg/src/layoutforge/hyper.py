"""Hyper-relations: joint pose priors for a dominant object plus a definite
multiset of secondary objects.

Joint assignments are built by sampling the per-secondary pairwise priors in
random order, keeping only combinations whose copies clear each other under
the tier rule, and retrying from scratch on dead ends. Relations are enriched
on demand; misses trigger a single background generation per key.
"""

from __future__ import annotations

import hashlib
import logging
import random
import threading
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

from .extraction import PairwiseRelation
from .geometry import OVERLAP_EPS, OrientedRect, rects_collide, vertical_extents_intersect
from .scene import Catalog, Transform

logger = logging.getLogger(__name__)

# Tier pairs that never collide: a carpet lies under floor furniture, a
# surface object stands on top of its supporting floor object.
DEFAULT_PASSABLE_TIERS = frozenset({frozenset(("carpet", "floor")), frozenset(("floor", "surface"))})


class UnsatisfiableKeyError(ValueError):
    """A required pairwise relation is missing; no amount of sampling helps."""


@dataclass(frozen=True)
class TieredFootprint:
    """Footprint plus the vertical/tier data collision checks need."""

    rect: OrientedRect
    tier: str
    bottom: float
    top: float


def tier_collides(
    a: TieredFootprint,
    b: TieredFootprint,
    passable: frozenset = DEFAULT_PASSABLE_TIERS,
    eps: float = OVERLAP_EPS,
) -> bool:
    """Collision test that lets declared tier pairs pass through each other
    and otherwise requires both plan overlap and vertical overlap."""
    if a.tier != b.tier and frozenset((a.tier, b.tier)) in passable:
        return False
    if not vertical_extents_intersect(a.bottom, a.top, b.bottom, b.top):
        return False
    return rects_collide(a.rect, b.rect, eps)


@dataclass(frozen=True)
class HyperKey:
    dominant_id: str
    secondaries: tuple[tuple[str, int], ...]

    @classmethod
    def from_counts(cls, dominant_id: str, counts: dict[str, int]) -> "HyperKey":
        if any(c < 1 for c in counts.values()):
            raise ValueError("secondary counts must be >= 1")
        return cls(dominant_id=dominant_id, secondaries=tuple(sorted(counts.items())))

    def to_string(self) -> str:
        parts = ",".join(f"{sid}*{count}" for sid, count in self.secondaries)
        return f"{self.dominant_id}|{parts}"

    @classmethod
    def from_string(cls, text: str) -> "HyperKey":
        dominant, _, rest = text.partition("|")
        if not dominant or not rest:
            raise ValueError(f"malformed hyper key {text!r}")
        counts: dict[str, int] = {}
        for part in rest.split(","):
            sid, _, count = part.partition("*")
            counts[sid] = counts.get(sid, 0) + (int(count) if count else 1)
        return cls.from_counts(dominant, counts)

    def slots(self) -> list[tuple[int, str]]:
        """(slot index, secondary instance id), copies consecutive, sorted order."""
        out = []
        for sid, count in self.secondaries:
            for _ in range(count):
                out.append((len(out), sid))
        return out

    def total_secondaries(self) -> int:
        return sum(c for _, c in self.secondaries)


@dataclass(frozen=True)
class HyperPrior:
    """One joint assignment: a pose per secondary slot, dominant at identity."""

    poses: tuple[tuple[int, Transform], ...]

    def pose_of(self, slot: int) -> Transform:
        for s, t in self.poses:
            if s == slot:
                return t
        raise KeyError(slot)


@dataclass
class HyperRelation:
    key: HyperKey
    priors: list[HyperPrior] = field(default_factory=list)
    status: str = "generating"  # complete | generating | failed
    reason: str = ""


def _slot_footprint(
    sid: str, pose: Transform, catalog: Catalog
) -> TieredFootprint:
    inst = catalog.get(sid)
    return TieredFootprint(
        rect=OrientedRect(pose.x, pose.z, inst.width, inst.depth, pose.theta),
        tier=inst.tier,
        bottom=pose.y,
        top=pose.y + inst.height,
    )


def _check_satisfiable(key: HyperKey, relations: dict[str, PairwiseRelation]) -> None:
    for sid, _ in key.secondaries:
        if sid not in relations or not relations[sid].priors:
            raise UnsatisfiableKeyError(
                f"no pairwise relation {key.dominant_id}|{sid} for hyper key {key.to_string()}"
            )


def _attempt_joint_assignment(
    key: HyperKey,
    relations: dict[str, PairwiseRelation],
    catalog: Catalog,
    rng: random.Random,
) -> Optional[HyperPrior]:
    """One pass: place every secondary copy in random order, sampling only
    priors that clear everything already placed; None on a dead end."""
    order = key.slots()
    rng.shuffle(order)
    placed: list[tuple[int, str, Transform]] = []
    bodies: list[TieredFootprint] = []
    for slot, sid in order:
        surviving = [
            t
            for t in relations[sid].priors
            if all(not tier_collides(_slot_footprint(sid, t, catalog), b) for b in bodies)
        ]
        if not surviving:
            return None
        choice = surviving[rng.randrange(len(surviving))]
        placed.append((slot, sid, choice))
        bodies.append(_slot_footprint(sid, choice, catalog))
    placed.sort(key=lambda p: p[0])
    return HyperPrior(poses=tuple((slot, t) for slot, _, t in placed))


def generate_hyper_prior(
    key: HyperKey,
    relations: dict[str, PairwiseRelation],
    catalog: Catalog,
    rng: random.Random,
    max_restarts: int = 100,
) -> Optional[HyperPrior]:
    """Sample one joint assignment, or None after max_restarts dead ends.

    relations maps each secondary instance id to its pairwise relation from
    key.dominant_id; a missing entry raises UnsatisfiableKeyError.
    """
    _check_satisfiable(key, relations)
    for _ in range(max_restarts):
        prior = _attempt_joint_assignment(key, relations, catalog, rng)
        if prior is not None:
            return prior
    return None


def _canonical_poses(key: HyperKey, prior: HyperPrior) -> list[tuple]:
    """Pose tuples with identical-copy slots sorted, for permutation-blind
    comparison of two priors."""
    out = []
    start = 0
    for sid, count in key.secondaries:
        block = [prior.pose_of(s) for s in range(start, start + count)]
        block.sort(key=lambda t: (t.x, t.y, t.z, t.theta))
        out.extend((t.x, t.y, t.z, t.theta) for t in block)
        start += count
    return out


def _same_prior(a: list[tuple], b: list[tuple], tol: float = 1e-6) -> bool:
    return all(
        abs(fa - fb) <= tol for pa, pb in zip(a, b) for fa, fb in zip(pa, pb)
    )


def enrich_hyper_relation(
    key: HyperKey,
    relations: dict[str, PairwiseRelation],
    catalog: Catalog,
    rng: random.Random,
    target_count: int = 64,
    attempt_budget: int = 5000,
    max_restarts: int = 100,
) -> HyperRelation:
    """Repeat generation until target_count distinct priors are collected or
    attempt_budget placement passes are spent; near-identical assignments
    (including permutations of identical copies) are kept once."""
    collected: list[HyperPrior] = []
    canon: list[list[tuple]] = []
    try:
        _check_satisfiable(key, relations)
        for _ in range(attempt_budget):
            if len(collected) >= target_count:
                break
            prior = _attempt_joint_assignment(key, relations, catalog, rng)
            if prior is None:
                continue
            c = _canonical_poses(key, prior)
            if any(_same_prior(c, seen) for seen in canon):
                continue
            collected.append(prior)
            canon.append(c)
    except UnsatisfiableKeyError as e:
        return HyperRelation(key=key, priors=[], status="failed", reason=str(e))
    if collected:
        return HyperRelation(key=key, priors=collected, status="complete")
    return HyperRelation(key=key, priors=[], status="failed", reason="no valid assignment found")


def key_seed(key: HyperKey) -> int:
    """Stable enrichment seed so regeneration is reproducible across processes."""
    digest = hashlib.sha256(key.to_string().encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class HyperScheduler:
    """Serves hyper-relation requests against a store, generating misses.

    In background mode a miss enqueues one generation task per key (single
    flight) and immediately returns a pending relation; in inline mode the
    miss is generated synchronously. Failures are remembered for the process
    lifetime and returned without re-enqueueing.
    """

    def __init__(
        self,
        store,
        catalog: Catalog,
        mode: str = "background",
        workers: Optional[int] = None,
        target_count: int = 64,
        attempt_budget: int = 5000,
        max_restarts: int = 100,
    ):
        if mode not in ("background", "inline"):
            raise ValueError(f"unknown scheduler mode {mode!r}")
        self.store = store
        self.catalog = catalog
        self.mode = mode
        self.target_count = target_count
        self.attempt_budget = attempt_budget
        self.max_restarts = max_restarts
        self._lock = threading.Lock()
        self._inflight: dict[str, Future] = {}
        self._failed: dict[str, HyperRelation] = {}
        self._executor: Optional[ThreadPoolExecutor] = None
        self._workers = workers

    def _ensure_executor(self) -> ThreadPoolExecutor:
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=self._workers)
        return self._executor

    def _relations_for(self, key: HyperKey) -> dict[str, PairwiseRelation]:
        relations = {}
        for sid, _ in key.secondaries:
            rel = self.store.load_pairwise(key.dominant_id, sid)
            if rel is not None:
                relations[sid] = rel
        return relations

    def _generate(self, key: HyperKey) -> HyperRelation:
        rng = random.Random(key_seed(key))
        return enrich_hyper_relation(
            key,
            self._relations_for(key),
            self.catalog,
            rng,
            target_count=self.target_count,
            attempt_budget=self.attempt_budget,
            max_restarts=self.max_restarts,
        )

    def request(self, key: HyperKey, force: bool = False) -> HyperRelation:
        """Return the stored relation, a failure record, or a pending signal
        while generation proceeds. Never blocks in background mode."""
        key_str = key.to_string()
        if not force:
            stored = self.store.load_hyper(key_str)
            if stored is not None and stored.status == "complete":
                return stored
            with self._lock:
                if key_str in self._failed:
                    return self._failed[key_str]
                if key_str in self._inflight:
                    return HyperRelation(key=key, status="generating")

        if self.mode == "inline":
            result = self._generate(key)
            self._record(key_str, result)
            return result

        with self._lock:
            if key_str in self._inflight:
                return HyperRelation(key=key, status="generating")
            future = self._ensure_executor().submit(self._generate, key)
            self._inflight[key_str] = future
            future.add_done_callback(lambda f, ks=key_str: self._on_done(ks, f))
        return HyperRelation(key=key, status="generating")

    def _record(self, key_str: str, result: HyperRelation) -> None:
        if result.status == "complete":
            self.store.save_hyper(result)
            with self._lock:
                self._failed.pop(key_str, None)
        else:
            with self._lock:
                self._failed[key_str] = result

    def _on_done(self, key_str: str, future: Future) -> None:
        try:
            result = future.result()
            self._record(key_str, result)
        except Exception:
            logger.exception("hyper generation for %s crashed", key_str)
            with self._lock:
                self._failed[key_str] = HyperRelation(
                    key=HyperKey.from_string(key_str), status="failed", reason="internal error"
                )
        finally:
            with self._lock:
                self._inflight.pop(key_str, None)

    def inflight_count(self) -> int:
        with self._lock:
            return len(self._inflight)

    def drain(self) -> None:
        """Wait for every in-flight generation to finish (tests, shutdown)."""
        while True:
            with self._lock:
                futures = list(self._inflight.values())
            if not futures:
                return
            for f in futures:
                f.exception()

    def shutdown(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None
