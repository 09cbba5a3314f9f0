import math
import random

import pytest

from layoutforge.extraction import PairwiseRelation
from layoutforge.geometry import OrientedRect
from layoutforge.hyper import (
    HyperKey,
    HyperScheduler,
    TieredFootprint,
    UnsatisfiableKeyError,
    enrich_hyper_relation,
    generate_hyper_prior,
    tier_collides,
)
from layoutforge.scene import Transform
from layoutforge.store import PriorStore

from conftest import relation
from oracles import canonical_hyper_prior, exhaustive_hyper_assignments

PI = math.pi


def body(cx, cz, w, d, theta, tier, bottom, top):
    return TieredFootprint(OrientedRect(cx, cz, w, d, theta), tier, bottom, top)


# -- tier_collides ---------------------------------------------------------------


def test_rug_under_table_passes():
    rug = body(0, 0, 2.4, 1.6, 0, "carpet", 0.0, 0.02)
    table = body(0, 0, 1.0, 0.6, 0, "floor", 0.0, 0.4)
    assert not tier_collides(rug, table)
    assert not tier_collides(table, rug)


def test_two_floor_chairs_collide():
    a = body(0, 0, 0.45, 0.45, 0, "floor", 0.0, 0.9)
    b = body(0.2, 0, 0.45, 0.45, 0, "floor", 0.0, 0.9)
    assert tier_collides(a, b)


def test_wall_frame_clears_low_stool():
    frame = body(0, 0, 0.8, 0.06, 0, "wall-mounted", 1.5, 2.1)
    stool = body(0, 0, 0.4, 0.4, 0, "floor", 0.0, 0.45)
    assert not tier_collides(frame, stool)
    # Same frame at floor level does collide.
    low_frame = body(0, 0, 0.8, 0.06, 0, "wall-mounted", 0.0, 0.6)
    assert tier_collides(low_frame, stool)


def test_tier_collides_symmetric():
    rng = random.Random(20)
    tiers = ["carpet", "floor", "surface", "wall-mounted"]
    for _ in range(300):
        a = body(
            rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.2, 2), rng.uniform(0.2, 2),
            rng.uniform(-PI, PI), rng.choice(tiers), rng.uniform(0, 1), rng.uniform(1, 2),
        )
        b = body(
            rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.2, 2), rng.uniform(0.2, 2),
            rng.uniform(-PI, PI), rng.choice(tiers), rng.uniform(0, 1), rng.uniform(1, 2),
        )
        assert tier_collides(a, b) == tier_collides(b, a)


# -- HyperKey ------------------------------------------------------------------------


def test_hyper_key_canonical_and_roundtrip():
    key = HyperKey.from_counts("table", {"sofa": 1, "chair": 2})
    assert key.to_string() == "table|chair*2,sofa*1"
    assert HyperKey.from_string(key.to_string()) == key
    assert key.slots() == [(0, "chair"), (1, "chair"), (2, "sofa")]


def test_hyper_key_rejects_bad_counts():
    with pytest.raises(ValueError):
        HyperKey.from_counts("table", {"chair": 0})
    with pytest.raises(ValueError):
        HyperKey.from_string("no-separator")


# -- generate_hyper_prior ----------------------------------------------------------------


def test_single_secondary_reduces_to_pairwise(hyper_catalog):
    rel = relation("coffee_table_glass", "sofa_gray", [(0.0, 0.0, 1.025, PI)])
    key = HyperKey.from_counts("coffee_table_glass", {"sofa_gray": 1})
    prior = generate_hyper_prior(key, {"sofa_gray": rel}, hyper_catalog, random.Random(0))
    assert prior is not None
    ((slot, pose),) = prior.poses
    assert slot == 0
    assert (pose.x, pose.z, pose.theta) == (0.0, 1.025, rel.priors[0].theta)


def test_unique_joint_assignment_found(hyper_catalog):
    sofa = relation("coffee_table_glass", "sofa_gray", [(0.0, 0.0, 1.025, PI)])
    tvstand = relation(
        "coffee_table_glass",
        "tvstand_low",
        [(0.0, 0.0, -1.2, 0.0), (0.0, 0.0, 1.2, PI)],
    )
    relations = {"sofa_gray": sofa, "tvstand_low": tvstand}
    key = HyperKey.from_counts("coffee_table_glass", {"sofa_gray": 1, "tvstand_low": 1})
    oracle = exhaustive_hyper_assignments(key, relations, hyper_catalog)
    assert len(oracle) == 1
    prior = generate_hyper_prior(key, relations, hyper_catalog, random.Random(1), max_restarts=100)
    assert prior is not None
    assert canonical_hyper_prior(key, prior) in oracle


def test_impossible_key_fails_after_restarts(hyper_catalog):
    # Two sofa copies whose priors all mutually collide.
    sofa = relation(
        "coffee_table_glass",
        "sofa_gray",
        [(0.0, 0.0, 1.025, PI), (0.1, 0.0, 1.05, PI)],
    )
    relations = {"sofa_gray": sofa}
    key = HyperKey.from_counts("coffee_table_glass", {"sofa_gray": 2})
    assert exhaustive_hyper_assignments(key, relations, hyper_catalog) == set()
    prior = generate_hyper_prior(key, relations, hyper_catalog, random.Random(2), max_restarts=50)
    assert prior is None


def test_missing_relation_is_unsatisfiable(hyper_catalog):
    key = HyperKey.from_counts("coffee_table_glass", {"sofa_gray": 1, "tvstand_low": 1})
    with pytest.raises(UnsatisfiableKeyError):
        generate_hyper_prior(
            key,
            {"sofa_gray": relation("coffee_table_glass", "sofa_gray", [(0, 0, 1.0, 0)])},
            hyper_catalog,
            random.Random(3),
        )


def test_sampled_poses_are_relation_members(hyper_three_valid, hyper_catalog):
    key = HyperKey.from_counts(
        "coffee_table_glass", {"sofa_gray": 1, "tvstand_low": 1, "rug_wool": 1}
    )
    rng = random.Random(4)
    slot_ids = [sid for _, sid in key.slots()]
    for _ in range(20):
        prior = generate_hyper_prior(key, hyper_three_valid, hyper_catalog, rng)
        assert prior is not None
        for slot, pose in prior.poses:
            priors = hyper_three_valid[slot_ids[slot]].priors
            assert any(
                abs(pose.x - p.x) < 1e-9
                and abs(pose.y - p.y) < 1e-9
                and abs(pose.z - p.z) < 1e-9
                and abs(pose.theta - p.theta) < 1e-9
                for p in priors
            )


def test_generate_deterministic_under_seed(hyper_three_valid, hyper_catalog):
    key = HyperKey.from_counts(
        "coffee_table_glass", {"sofa_gray": 1, "tvstand_low": 1, "rug_wool": 1}
    )
    a = generate_hyper_prior(key, hyper_three_valid, hyper_catalog, random.Random(5))
    b = generate_hyper_prior(key, hyper_three_valid, hyper_catalog, random.Random(5))
    assert a == b


# -- enrich_hyper_relation ----------------------------------------------------------------


def test_enrich_finds_exactly_the_oracle_set(hyper_three_valid, hyper_catalog):
    key = HyperKey.from_counts(
        "coffee_table_glass", {"sofa_gray": 1, "tvstand_low": 1, "rug_wool": 1}
    )
    oracle = exhaustive_hyper_assignments(key, hyper_three_valid, hyper_catalog)
    assert len(oracle) == 3
    hr = enrich_hyper_relation(
        key, hyper_three_valid, hyper_catalog, random.Random(6), target_count=10, attempt_budget=10_000
    )
    assert hr.status == "complete"
    found = {canonical_hyper_prior(key, p) for p in hr.priors}
    assert found == oracle


def test_enrich_target_one_exits_fast(hyper_three_valid, hyper_catalog):
    key = HyperKey.from_counts(
        "coffee_table_glass", {"sofa_gray": 1, "tvstand_low": 1, "rug_wool": 1}
    )
    hr = enrich_hyper_relation(
        key, hyper_three_valid, hyper_catalog, random.Random(7), target_count=1, attempt_budget=10_000
    )
    assert hr.status == "complete"
    assert len(hr.priors) == 1


def test_enrich_budget_zero_fails(hyper_three_valid, hyper_catalog):
    key = HyperKey.from_counts(
        "coffee_table_glass", {"sofa_gray": 1, "tvstand_low": 1, "rug_wool": 1}
    )
    hr = enrich_hyper_relation(
        key, hyper_three_valid, hyper_catalog, random.Random(8), target_count=4, attempt_budget=0
    )
    assert hr.status == "failed"
    assert hr.priors == []


def test_enrich_deduplicates_identical_copy_permutations(hyper_catalog):
    # Two identical sofas with two mutually clear priors: swapping the copies
    # is the same assignment, so exactly one prior must survive dedup.
    sofa = relation(
        "coffee_table_glass",
        "sofa_gray",
        [(0.0, 0.0, 1.025, PI), (0.0, 0.0, -1.025, 0.0)],
    )
    key = HyperKey.from_counts("coffee_table_glass", {"sofa_gray": 2})
    hr = enrich_hyper_relation(
        key, {"sofa_gray": sofa}, hyper_catalog, random.Random(9), target_count=8, attempt_budget=2000
    )
    assert hr.status == "complete"
    assert len(hr.priors) == 1


# -- scheduler / request path ----------------------------------------------------------------


def scheduler_with_relations(tmp_path, hyper_catalog, relations, mode="background"):
    store = PriorStore(tmp_path / "store")
    for rel in relations.values():
        store.save_pairwise(rel)
    return store, HyperScheduler(store, hyper_catalog, mode=mode, workers=1, target_count=8)


def test_request_returns_cached_complete(tmp_path, hyper_three_valid, hyper_catalog):
    store, sched = scheduler_with_relations(tmp_path, hyper_catalog, hyper_three_valid)
    key = HyperKey.from_counts(
        "coffee_table_glass", {"sofa_gray": 1, "tvstand_low": 1, "rug_wool": 1}
    )
    hr = enrich_hyper_relation(
        key, hyper_three_valid, hyper_catalog, random.Random(10), target_count=8, attempt_budget=2000
    )
    store.save_hyper(hr)
    got = sched.request(key)
    assert got.status == "complete"
    assert sched.inflight_count() == 0


def test_request_single_flight_and_background_completion(tmp_path, hyper_three_valid, hyper_catalog):
    store, sched = scheduler_with_relations(tmp_path, hyper_catalog, hyper_three_valid)
    key = HyperKey.from_counts(
        "coffee_table_glass", {"sofa_gray": 1, "tvstand_low": 1, "rug_wool": 1}
    )
    first = sched.request(key)
    second = sched.request(key)
    assert first.status == "generating"
    assert second.status == "generating"
    assert sched.inflight_count() <= 1
    sched.drain()
    done = sched.request(key)
    assert done.status == "complete"
    assert len(done.priors) == 3
    sched.shutdown()


def test_request_remembers_failures(tmp_path, hyper_catalog):
    sofa = relation(
        "coffee_table_glass",
        "sofa_gray",
        [(0.0, 0.0, 1.025, PI), (0.1, 0.0, 1.05, PI)],
    )
    store, sched = scheduler_with_relations(
        tmp_path, hyper_catalog, {"sofa_gray": sofa}, mode="inline"
    )
    key = HyperKey.from_counts("coffee_table_glass", {"sofa_gray": 2})
    first = sched.request(key)
    assert first.status == "failed"
    writes_before = store.writes
    again = sched.request(key)
    assert again.status == "failed"
    assert store.writes == writes_before  # no re-enqueue, no store writes
    # A forced request regenerates (and fails again here).
    forced = sched.request(key, force=True)
    assert forced.status == "failed"


def test_inline_mode_generates_synchronously(tmp_path, hyper_three_valid, hyper_catalog):
    store, sched = scheduler_with_relations(
        tmp_path, hyper_catalog, hyper_three_valid, mode="inline"
    )
    key = HyperKey.from_counts(
        "coffee_table_glass", {"sofa_gray": 1, "tvstand_low": 1, "rug_wool": 1}
    )
    got = sched.request(key)
    assert got.status == "complete"
    assert store.load_hyper(key.to_string()).status == "complete"
