import math
import random

import pytest

from layoutforge.extraction import ExtractionParams, PairwiseRelation
from layoutforge.pipeline import extract_to_store
from layoutforge.scene import Catalog, ObjectInstance, Transform
from layoutforge.store import PriorStore
from layoutforge.synthetic import (
    CorpusParams,
    bedroom_request,
    crowded_request,
    fixture_catalog,
    living_dining_request,
    make_corpus,
)

PI = math.pi


@pytest.fixture(scope="session")
def catalog() -> Catalog:
    return fixture_catalog()


@pytest.fixture(scope="session")
def corpus():
    return make_corpus(CorpusParams(n_scenes=50, seed=7))


@pytest.fixture(scope="session")
def populated_store(tmp_path_factory, corpus):
    """Store holding the priors and chains extracted from the synthetic corpus."""
    root = tmp_path_factory.mktemp("priors")
    store = PriorStore(root)
    extract_to_store(corpus, store, ExtractionParams())
    return store


@pytest.fixture
def bedroom():
    return bedroom_request()


@pytest.fixture
def living_dining():
    return living_dining_request()


@pytest.fixture
def crowded():
    return crowded_request()


# -- handcrafted relation fixtures ------------------------------------------------


def relation(dom: str, sec: str, poses: list[tuple]) -> PairwiseRelation:
    return PairwiseRelation(
        dominant_id=dom,
        secondary_id=sec,
        priors=[Transform(*p) for p in poses],
    )


@pytest.fixture
def chair_ring_relation():
    """Four chair priors on the four sides of a table, mutually clear."""
    return relation(
        "dining_table_oak",
        "chair_walnut",
        [
            (0.0, 0.0, 0.725, PI),
            (0.0, 0.0, -0.725, 0.0),
            (1.075, 0.0, 0.0, PI / 2),
            (-1.075, 0.0, 0.0, -PI / 2),
        ],
    )


@pytest.fixture
def conflict_relation():
    """Eight chair priors where 0 overlaps 4 and 1 overlaps 5; the rest are
    mutually clear. Conflict graph: {0-4}, {1-5}."""
    return relation(
        "dining_table_oak",
        "chair_walnut",
        [
            (1.0, 0.0, 0.1, 0.0),
            (-1.0, 0.0, 0.1, 0.0),
            (0.0, 0.0, 1.0, 0.0),
            (0.0, 0.0, -1.0, 0.0),
            (1.0, 0.0, -0.1, 0.0),
            (-1.0, 0.0, -0.1, 0.0),
            (2.0, 0.0, 0.0, 0.0),
            (-2.0, 0.0, 0.0, 0.0),
        ],
    )


CONFLICT_EDGES = {frozenset((0, 4)), frozenset((1, 5))}


@pytest.fixture
def hyper_catalog():
    cat = Catalog()
    cat.add(ObjectInstance("coffee_table_glass", 1.0, 0.6, 0.4, "floor", dominant_capable=True))
    cat.add(ObjectInstance("sofa_gray", 1.8, 0.85, 0.8, "floor"))
    cat.add(ObjectInstance("tvstand_low", 1.5, 0.45, 0.5, "floor"))
    cat.add(ObjectInstance("rug_wool", 2.4, 1.6, 0.02, "carpet"))
    return cat


@pytest.fixture
def hyper_three_valid(hyper_catalog):
    """sofa x1, tvstand x1, rug x1 around a coffee table with exactly three
    collision-free joint assignments:
      (A, C, R), (A, E, R), (B, D, R)."""
    sofa = relation(
        "coffee_table_glass",
        "sofa_gray",
        [
            (0.0, 0.0, 1.025, PI),   # A: front
            (0.0, 0.0, -1.025, 0.0), # B: back
        ],
    )
    tvstand = relation(
        "coffee_table_glass",
        "tvstand_low",
        [
            (0.0, 0.0, -1.2, 0.0),   # C: collides with B only
            (0.0, 0.0, 1.2, PI),     # D: collides with A only
            (1.0, 0.0, -1.0, PI / 2) # E: collides with B only
        ],
    )
    rug = relation("coffee_table_glass", "rug_wool", [(0.0, 0.0, 0.0, 0.0)])  # R
    return {"sofa_gray": sofa, "tvstand_low": tvstand, "rug_wool": rug}


@pytest.fixture
def rng():
    return random.Random(42)
