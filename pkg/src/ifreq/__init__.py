"""Intrinsic frequency extraction from single-cycle pressure waveforms.

Fits a two-segment sinusoidal model with continuity and periodicity coupling
to one cardiac cycle and reports the two dominant angular frequencies, using
either an exhaustive grid scan or a fast multi-start pattern search over the
analytically reduced objective.
"""

from .model import (
    FreqPair,
    HarmonicSeriesSpec,
    InvalidParameterError,
    InvalidSpecError,
    ModelParams,
    SampledCycle,
    check_constraints,
    constraint_residuals,
    evaluate_model,
    grid_counts,
    synthesize_appendix_cycle,
    synthesize_cycle,
)
from .objective import (
    CONDITION_LIMIT,
    DEFAULT_DOMAIN,
    EPSILON_DEGENERATE,
    BasisVectors,
    Case,
    DegenerateFrequencyError,
    Domain,
    GramConditioningError,
    InnerSolution,
    LatticeNode,
    build_basis,
    centered_energy,
    classify,
    enumerate_nodes,
    node_distance,
    normalized_objective,
    objective_p,
    reduce_constraints,
    solve_inner,
    valley_skew,
)
from .pipeline import (
    BatchResult,
    CycleRecord,
    IngestResult,
    NoValidRecordsError,
    Rejection,
    ResultRecord,
    export_grid,
    generate,
    ingest,
    read_results,
    result_record,
    run_batch,
    sample_params,
    write_results,
)
from .search import (
    ComparisonReport,
    CycleComparison,
    GridConfig,
    GridTooLargeError,
    ObjectiveGrid,
    SearchConfig,
    SearchOutcome,
    StartTrace,
    TraceStep,
    UnconvergedSearchError,
    brute_force_if,
    compare_algorithms,
    compass_search,
    fast_if,
)

__version__ = "0.1.0"

__all__ = [
    "BasisVectors",
    "BatchResult",
    "CONDITION_LIMIT",
    "Case",
    "ComparisonReport",
    "CycleComparison",
    "CycleRecord",
    "DEFAULT_DOMAIN",
    "DegenerateFrequencyError",
    "Domain",
    "EPSILON_DEGENERATE",
    "FreqPair",
    "GramConditioningError",
    "GridConfig",
    "GridTooLargeError",
    "HarmonicSeriesSpec",
    "IngestResult",
    "InnerSolution",
    "InvalidParameterError",
    "InvalidSpecError",
    "LatticeNode",
    "ModelParams",
    "NoValidRecordsError",
    "ObjectiveGrid",
    "Rejection",
    "ResultRecord",
    "SampledCycle",
    "SearchConfig",
    "SearchOutcome",
    "StartTrace",
    "TraceStep",
    "UnconvergedSearchError",
    "brute_force_if",
    "build_basis",
    "centered_energy",
    "check_constraints",
    "classify",
    "compare_algorithms",
    "compass_search",
    "constraint_residuals",
    "enumerate_nodes",
    "evaluate_model",
    "export_grid",
    "fast_if",
    "generate",
    "grid_counts",
    "ingest",
    "node_distance",
    "normalized_objective",
    "objective_p",
    "read_results",
    "reduce_constraints",
    "result_record",
    "run_batch",
    "sample_params",
    "solve_inner",
    "valley_skew",
    "synthesize_appendix_cycle",
    "synthesize_cycle",
    "write_results",
]
