"""layoutforge: instance-level spatial priors plus geometric placement."""

from .arranging import ArrangeConfig, Block, PlacementResult, arrange_scene
from .chains import PatternChainSet, align_chain, generate_chain, generate_chain_set
from .extraction import (
    DpcScores,
    ExtractionParams,
    PairwiseRelation,
    RelativeSample,
    dpc_denoise,
    dpc_scores,
    extract_pairwise_relations,
    relative_pose,
    transform_distance,
)
from .grouping import (
    CoherentGroup,
    RelationGraph,
    assign_dominants,
    build_groups,
    build_relation_graph,
    coherent_components,
    instantiate_group,
)
from .hyper import (
    HyperKey,
    HyperPrior,
    HyperRelation,
    HyperScheduler,
    TieredFootprint,
    enrich_hyper_relation,
    generate_hyper_prior,
    tier_collides,
)
from .pipeline import LayoutOutcome, LayoutSettings, extract_to_store, layout_scene
from .scene import (
    Catalog,
    ObjectInstance,
    PlacedObject,
    RoomEnvelope,
    Scene,
    Transform,
    load_scene_corpus,
    world_footprint,
)
from .store import PriorStore

__version__ = "0.1.0"
