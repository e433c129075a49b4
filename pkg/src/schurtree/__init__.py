"""Random spanning trees and effective resistances via recursive
approximate Schur complements.

The package samples spanning trees of a weighted undirected multigraph
with probability proportional to the product of tree edge weights, and
estimates effective resistances of vertex pairs to a multiplicative
e^(+-eps) factor.  Both ride on a common approximate-Schur-complement
primitive plus exact dense oracles used for validation.
"""

from .chol import (
    PartialCholesky,
    apx_partial_cholesky,
    approx_schur,
    clique_sample,
    graph_sparsify,
    lev_score_est,
)
from .config import DEFAULT_SEED, SamplerConfig
from .errors import (
    BadPair,
    Disconnected,
    EmptyInput,
    EmptyKeep,
    GraphFileError,
    InternalError,
    NonPositiveWeight,
    SchurTreeError,
    SelfLoopInput,
    TooFewVertices,
    UndersampledCell,
    UnknownEdge,
)
from .estimators import EffectiveResistanceEstimator, SpanningTreeSampler
from .graph import (
    WeightedMultigraph,
    build_graph,
    contract_edge,
    delete_edges,
    from_dense_laplacian,
    is_connected,
    laplacian_of,
)
from .oracle import (
    check_spectral_approx,
    effective_resistance_exact,
    enumerate_trees,
    leverage_score_exact,
    leverage_scores_exact,
    schur_exact,
    sequential_leverage_sampler,
    spanning_tree_count,
    wilson_sample,
)
from .reff import ReffEstimates, estimate_reff, help_estimate_reff
from .rng import derive_seed, make_rng
from .sampler import TreeSample, generate_spanning_tree
from .stats import (
    DistributionTestReport,
    expectation_test,
    marginal_test,
    run_with_retry,
    tree_distribution_test,
)

__version__ = "0.1.0"

__all__ = [
    "BadPair",
    "DEFAULT_SEED",
    "Disconnected",
    "DistributionTestReport",
    "EffectiveResistanceEstimator",
    "EmptyInput",
    "EmptyKeep",
    "GraphFileError",
    "InternalError",
    "NonPositiveWeight",
    "PartialCholesky",
    "ReffEstimates",
    "SamplerConfig",
    "SchurTreeError",
    "SelfLoopInput",
    "SpanningTreeSampler",
    "TooFewVertices",
    "TreeSample",
    "UndersampledCell",
    "UnknownEdge",
    "WeightedMultigraph",
    "approx_schur",
    "apx_partial_cholesky",
    "build_graph",
    "check_spectral_approx",
    "clique_sample",
    "contract_edge",
    "delete_edges",
    "derive_seed",
    "effective_resistance_exact",
    "enumerate_trees",
    "estimate_reff",
    "expectation_test",
    "from_dense_laplacian",
    "generate_spanning_tree",
    "graph_sparsify",
    "help_estimate_reff",
    "is_connected",
    "laplacian_of",
    "lev_score_est",
    "leverage_score_exact",
    "leverage_scores_exact",
    "make_rng",
    "marginal_test",
    "run_with_retry",
    "schur_exact",
    "sequential_leverage_sampler",
    "spanning_tree_count",
    "tree_distribution_test",
    "wilson_sample",
]
