"""Community detection on sparse graphs via a rank-constrained SDP relaxation
solved by block-coordinate descent, with SBM benchmark generation, a Bethe
Hessian spectral baseline and clone-ensemble convergence diagnostics."""

from .backend import BACKEND
from .graphs import (
    AttachmentForest,
    EdgeListParseError,
    Graph,
    InvalidParameterError,
    PlantedPartition,
    SbmParams,
    add_neighborhood_cliques,
    extend_labels_to_trees,
    load_edge_list,
    params_from_snr,
    save_edge_list,
    sbm_generate,
    two_core,
)
from .solver import (
    SolverResult,
    SpinConfig,
    bcd_sweep,
    component_covariance,
    init_config,
    objective,
    principal_component,
    project_to_labels,
    run_solver,
)
from .spectral import (
    BetheHessianOperator,
    EigenPairs,
    bethe_hessian_estimate,
    bh_matvec,
    smallest_eigenpairs,
)
from .diagnostics import (
    DistanceHistogram,
    align_rotation,
    aligned_pairwise_distances,
    clone_distance,
    overlap,
    raw_pairwise_distances,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    NonConvergenceError,
    child_seed,
    prepare_graph,
    run_bench,
    run_clones,
    run_sweep,
)

__version__ = "0.1.0"
