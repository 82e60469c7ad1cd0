"""Training-free condensation of evolving graphs by clustering propagated features."""
from .clustering import (
    Assignment,
    ClusterConfig,
    ConfigurationError,
    balanced_sse,
    cluster_class,
    cluster_counts,
    fuzzy_cmeans,
    incremental_seed,
    kmeanspp_seed,
    lloyd,
)
from .condense import CondensedGraph, CondenseReport, condense
from .evaluation import (
    bounds_sweep,
    check_theorem1,
    check_theorem2,
    check_theorem3,
    condensed_accuracy,
    coreset_baselines,
    fit_linear,
)
from .evolve import EvolveState, evolve_step, run_stream
from .graph import (
    BatchStream,
    Dataset,
    GraphFormatError,
    LabelSet,
    SparseGraph,
    load_dataset,
    load_dataset_dir,
    load_graph,
    snapshot,
)
from .kernels import BACKEND
from .propagation import PropagationConfig, normalize, propagate, propagate_graph
from .synth import SyntheticSpec, make_sbm

__version__ = "0.1.0"

__all__ = [
    "Assignment", "BACKEND", "BatchStream", "ClusterConfig", "CondenseReport",
    "CondensedGraph", "ConfigurationError", "Dataset", "EvolveState", "GraphFormatError",
    "LabelSet", "PropagationConfig", "SparseGraph", "SyntheticSpec", "balanced_sse",
    "bounds_sweep", "check_theorem1", "check_theorem2", "check_theorem3", "cluster_class",
    "cluster_counts", "condense", "condensed_accuracy", "coreset_baselines", "evolve_step",
    "fit_linear", "fuzzy_cmeans", "incremental_seed", "kmeanspp_seed", "lloyd", "load_dataset",
    "load_dataset_dir", "load_graph", "make_sbm", "normalize", "propagate",
    "propagate_graph", "run_stream", "snapshot",
]
