"""Causal-inference engine: symbolic identification of interventional queries on
ADMGs with latent confounders, compilation into executable networks of
conditional samplers, and a discrete-SCM oracle for verifying both."""

from .engine import (
    BuildResult,
    DatasetSource,
    ExactSource,
    QuerySpec,
    RecursionState,
    SamplingNetwork,
    ancestral_sample,
    build_conditional_sampler,
    build_network,
    merge_networks,
    project_targets,
    sample_interventional,
)
from .estimands import DistTable, evaluate_estimand, format_estimand
from .graphs import Admg, GraphError, Variable, format_graph, parse_graph
from .identify import (
    Hedge,
    IdResult,
    NotIdentifiable,
    TraceEntry,
    identify_conditional_effect,
    identify_effect,
)
from .models import (
    CptModel,
    Dataset,
    exact_conditional,
    fit_conditional,
    read_dataset_csv,
    uniform_model,
    write_dataset_csv,
)
from .scm import (
    DiscreteScm,
    catalog,
    catalog_entry,
    empirical_distribution,
    exact_interventional,
    exact_joint,
    noisy_copy_scm,
    read_scm,
    sample_observational,
    tvd,
    write_scm,
)

__all__ = [
    "Admg",
    "BuildResult",
    "CptModel",
    "Dataset",
    "DatasetSource",
    "DiscreteScm",
    "DistTable",
    "ExactSource",
    "GraphError",
    "Hedge",
    "IdResult",
    "NotIdentifiable",
    "QuerySpec",
    "RecursionState",
    "SamplingNetwork",
    "TraceEntry",
    "Variable",
    "ancestral_sample",
    "build_conditional_sampler",
    "build_network",
    "catalog",
    "catalog_entry",
    "empirical_distribution",
    "evaluate_estimand",
    "exact_conditional",
    "exact_interventional",
    "exact_joint",
    "fit_conditional",
    "format_estimand",
    "format_graph",
    "identify_conditional_effect",
    "identify_effect",
    "merge_networks",
    "noisy_copy_scm",
    "parse_graph",
    "project_targets",
    "read_dataset_csv",
    "read_scm",
    "sample_interventional",
    "sample_observational",
    "tvd",
    "uniform_model",
    "write_dataset_csv",
    "write_scm",
]
