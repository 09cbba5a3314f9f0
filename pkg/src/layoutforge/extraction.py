"""Instance-level pairwise relation extraction with density-peak denoising.

A relation (a -> b) collects the pose of every b observed near a dominant-
capable a across the corpus, expressed in a's local frame. Density-peak
scoring (local density rho, distance-to-denser delta) flags samples that are
simultaneously isolated and far from any denser sample; those are removed
and the survivors become the priors, used verbatim.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import normalize_angle, rotate_xz, wrap_angle_diff
from .jsonio import content_hash
from .scene import Catalog, PlacedObject, Scene, Transform

logger = logging.getLogger(__name__)


class InsufficientSamplesError(ValueError):
    """Density scoring needs at least two samples."""


class EmptyRelationError(ValueError):
    """Denoising removed every sample; the relation should be dropped."""


@dataclass(frozen=True)
class RelativeSample:
    d_pose: Transform
    source_scene: str


@dataclass
class PairwiseRelation:
    dominant_id: str
    secondary_id: str
    priors: list[Transform]
    meta: dict = field(default_factory=dict)

    @property
    def key(self) -> str:
        return f"{self.dominant_id}|{self.secondary_id}"

    def content_hash(self) -> str:
        return content_hash([t.to_json() for t in self.priors])


@dataclass
class DpcScores:
    rho: list[int]
    delta: list[float]
    d_c: float


@dataclass(frozen=True)
class ExtractionParams:
    angle_weight: float = 1.0
    rho_quantile: float = 0.10
    delta_quantile: float = 0.90
    proximity: float = 3.0
    min_samples: int = 4

    def meta(self) -> dict:
        return {
            "angleWeight": self.angle_weight,
            "rhoQ": self.rho_quantile,
            "deltaQ": self.delta_quantile,
            "proximity": self.proximity,
        }


def relative_pose(dominant: PlacedObject, secondary: PlacedObject) -> Transform:
    """Pose of the secondary object expressed in the dominant's local frame."""
    td = dominant.transform
    ts = secondary.transform
    if td is None or ts is None:
        raise ValueError("relative_pose requires both objects to be placed")
    dx, dz = rotate_xz(ts.x - td.x, ts.z - td.z, -td.theta)
    return Transform(dx, ts.y - td.y, dz, normalize_angle(ts.theta - td.theta))


def transform_distance(a: Transform, b: Transform, angle_weight: float = 1.0) -> float:
    """Euclidean distance between poses; the wrapped angle difference is scaled
    by angle_weight (meters per radian) into the same units as translation."""
    if angle_weight < 0:
        raise ValueError("angle_weight must be non-negative")
    dth = wrap_angle_diff(a.theta - b.theta)
    return math.sqrt(
        (a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2 + (angle_weight * dth) ** 2
    )


def _distance_matrix(samples: list[RelativeSample], angle_weight: float) -> np.ndarray:
    pts = np.array(
        [[s.d_pose.x, s.d_pose.y, s.d_pose.z] for s in samples], dtype=np.float64
    )
    thetas = np.array([s.d_pose.theta for s in samples], dtype=np.float64)
    diff = pts[:, None, :] - pts[None, :, :]
    sq = np.sum(diff * diff, axis=2)
    dth = thetas[:, None] - thetas[None, :]
    dth = np.mod(dth + np.pi, 2.0 * np.pi) - np.pi
    sq += (angle_weight * dth) ** 2
    return np.sqrt(sq)


def dpc_scores(
    samples: list[RelativeSample], angle_weight: float = 1.0, d_c: float | None = None
) -> DpcScores:
    """Density (rho) and separation (delta) scores for every sample.

    The cutoff d_c is the ceil(0.015 * K^2)-th smallest of the K*(K-1)
    ordered non-self pairwise distances (index clamped to that range), which
    keeps the average neighborhood around 1.5% of the sample count. Delta
    follows the reference density-peak procedure: samples are visited in
    descending rho (ties by original index); each takes its minimum distance
    to an earlier sample, and the very first takes its largest distance to
    any other sample. Tied peaks therefore contribute one high-delta sample,
    not a whole block, which keeps delta usable as an outlier score.
    """
    k = len(samples)
    if k < 2:
        raise InsufficientSamplesError(f"need at least 2 samples, got {k}")
    dist = _distance_matrix(samples, angle_weight)
    if d_c is None:
        flat = dist[~np.eye(k, dtype=bool)]
        order = math.ceil(0.015 * k * k)
        order = min(max(order, 1), k * (k - 1))
        d_c = float(np.sort(flat)[order - 1])

    within = dist <= d_c
    np.fill_diagonal(within, False)
    rho = within.sum(axis=1).astype(int)

    order_desc = np.argsort(-rho, kind="stable")
    delta = np.empty(k, dtype=np.float64)
    first = order_desc[0]
    delta[first] = dist[first].max()
    for pos in range(1, k):
        i = order_desc[pos]
        delta[i] = dist[i, order_desc[:pos]].min()
    return DpcScores(rho=rho.tolist(), delta=delta.tolist(), d_c=d_c)


def dpc_denoise(
    samples: list[RelativeSample],
    scores: DpcScores,
    rho_quantile: float = 0.10,
    delta_quantile: float = 0.90,
) -> list[int]:
    """Indices (original order) surviving outlier removal.

    Removed samples are exactly those strictly below the rho quantile and
    strictly above the delta quantile: isolated and far from anything denser.
    """
    if not (0 < rho_quantile < 1 and 0 < delta_quantile < 1):
        raise ValueError("quantiles must lie in (0, 1)")
    rho = np.asarray(scores.rho, dtype=np.float64)
    delta = np.asarray(scores.delta, dtype=np.float64)
    rho_thr = float(np.quantile(rho, rho_quantile))
    delta_thr = float(np.quantile(delta, delta_quantile))
    kept = [
        i for i in range(len(samples)) if not (rho[i] < rho_thr and delta[i] > delta_thr)
    ]
    if not kept:
        raise EmptyRelationError("denoising removed every sample")
    return kept


def _center_distance(a: PlacedObject, b: PlacedObject) -> float:
    return math.hypot(a.transform.x - b.transform.x, a.transform.z - b.transform.z)


def collect_samples(
    corpus: list[Scene], catalog: Catalog, proximity: float
) -> dict[tuple[str, str], list[RelativeSample]]:
    """Raw co-occurrence samples per (dominant id, secondary id) pair."""
    samples: dict[tuple[str, str], list[RelativeSample]] = {}
    for scene in corpus:
        objs = scene.objects
        for i, a in enumerate(objs):
            if a.transform is None or not catalog.get(a.instance_id).dominant_capable:
                continue
            for j, b in enumerate(objs):
                if i == j or b.transform is None:
                    continue
                if _center_distance(a, b) > proximity:
                    continue
                pose = relative_pose(a, b)
                sec_tier = catalog.get(b.instance_id).tier
                if sec_tier in ("floor", "carpet"):
                    # Corpus elevation jitter is noise for ground objects.
                    pose = Transform(pose.x, 0.0, pose.z, pose.theta)
                samples.setdefault((a.instance_id, b.instance_id), []).append(
                    RelativeSample(d_pose=pose.rounded(), source_scene=scene.scene_id)
                )
    return samples


def extract_pairwise_relations(
    corpus: list[Scene],
    catalog: Catalog,
    params: ExtractionParams = ExtractionParams(),
    report: dict | None = None,
) -> dict[tuple[str, str], PairwiseRelation]:
    """Full extraction pass: collect, score, denoise, keep survivors.

    When `report` is given it is filled with per-pair raw/kept counts.
    """
    collected = collect_samples(corpus, catalog, params.proximity)
    relations: dict[tuple[str, str], PairwiseRelation] = {}
    for key in sorted(collected):
        pair_samples = collected[key]
        if len(pair_samples) >= 2:
            try:
                scores = dpc_scores(pair_samples, params.angle_weight)
                kept = dpc_denoise(
                    pair_samples, scores, params.rho_quantile, params.delta_quantile
                )
            except EmptyRelationError:
                logger.warning("relation %s|%s denoised to nothing; dropped", *key)
                continue
        else:
            kept = list(range(len(pair_samples)))
        if report is not None:
            report[key] = {"raw": len(pair_samples), "kept": len(kept)}
        if len(kept) < params.min_samples:
            continue
        relations[key] = PairwiseRelation(
            dominant_id=key[0],
            secondary_id=key[1],
            priors=[pair_samples[i].d_pose for i in kept],
            meta=params.meta(),
        )
    return relations
