"""Separable network embedding by separated matrix factorization."""
from .errors import DataError, NumericalError, SepneError, UnsupportedFeatureError
from .graph import GraphStore, load_edge_list
from .landmark import (
    LandmarkSet,
    select_dd,
    select_dp,
    select_gds,
    select_landmarks,
    select_uf,
)
from .partition import (
    PartitionPlan,
    load_partition,
    partition_interested,
    partition_louvain,
    partition_random,
)
from .proximity import (
    ComplementProducts,
    ProximityConfig,
    SparseBlock,
    complement_products,
    proximity_block,
    transition_row,
)
from .smf import (
    EmbeddingResult,
    LandmarkEmbedding,
    ProximityBlockSet,
    SectionBuilder,
    SetSolution,
    SmfConfig,
    embed_landmarks,
    evaluate_loss,
    loss_gradient,
    run_pipeline,
    solve_set,
)

__version__ = "0.1.0"
