"""Hybrid classical-quantum clustering aggregation and allocation simulator.

The package has two halves that meet in the middle:

* the live pipeline (``dataset``, ``clustering``, ``consensus``,
  ``qubo_solver``, ``pipeline``) runs the silhouette-gated clustering
  aggregation loop under a malleable worker lease;
* the simulator (``simsched``, ``experiments``) replays the same workload
  shape on a modeled cluster to compare allocation strategies.
"""

from .clustering import (
    Algo,
    AlgoParams,
    Clustering,
    DbscanParams,
    HierarchicalParams,
    KmeansParams,
    Linkage,
    dbscan,
    hierarchical,
    kmeans,
    run_all,
)
from .config import default_experiment_config, load_experiment_config
from .consensus import (
    ConsensusClustering,
    OverlapGraph,
    QuboProblem,
    build_graph,
    build_qubo,
    decode,
    evaluate,
    evaluate_matrix,
)
from .dataset import Dataset, generate_blobs, load_csv, save_csv
from .experiments import ExperimentGrid, run_grid
from .pipeline import (
    MalleableCheckpoint,
    MalleableRuntime,
    ParamSchedule,
    PipelineConfig,
    PipelineResult,
    acquire_lease,
    run_pipeline,
    silhouette,
)
from .qubo_solver import Backend, SaParams, SolveResult, solve, solve_exact, solve_sa
from .resources import Phase, ResourceLease, ResourceProvider
from .simsched import (
    ClusterSpec,
    HybridWorkflow,
    SimReport,
    Strategy,
    WorkloadModel,
    calibrate,
    export_timeline,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "Algo", "AlgoParams", "Backend", "Clustering", "ClusterSpec",
    "ConsensusClustering", "Dataset", "DbscanParams", "ExperimentGrid",
    "HierarchicalParams", "HybridWorkflow", "KmeansParams", "Linkage",
    "MalleableCheckpoint", "MalleableRuntime", "OverlapGraph", "ParamSchedule",
    "Phase", "PipelineConfig", "PipelineResult", "QuboProblem", "ResourceLease",
    "ResourceProvider", "SaParams", "SimReport", "SolveResult", "Strategy",
    "WorkloadModel", "acquire_lease", "build_graph", "build_qubo", "calibrate",
    "dbscan", "decode", "default_experiment_config", "evaluate",
    "evaluate_matrix", "export_timeline", "generate_blobs", "hierarchical",
    "kmeans", "load_csv", "load_experiment_config", "run_all", "run_grid",
    "run_pipeline", "save_csv", "silhouette", "simulate", "solve",
    "solve_exact", "solve_sa",
]
