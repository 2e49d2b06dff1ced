"""Knowledge-guided architecture design for graph neural networks.

The package turns a table of recorded (dataset, architecture, performance)
benchmarks into reusable design knowledge: it scores which graph properties
predict transfer, ranks recorded datasets by similarity to an unseen graph,
pools their best architectures, and runs a propose/refine loop that spends a
fixed trial budget. Everything runs offline against recorded results; a
trainer process can be plugged in over a small JSON protocol when real
evaluations are wanted.
"""

from .errors import (
    BackendError,
    DataError,
    FileFormatError,
    GnarchError,
    LeakageGuardError,
    RecordMissingError,
    TrainerProtocolError,
)
from .evaluator import (
    EvalRequest,
    EvalResult,
    ExternalEvaluator,
    LookupEvaluator,
    TrainerConfig,
    evaluate_external,
    evaluate_lookup,
    hyperparams_for,
)
from .graph_data import DatasetMeta, GraphDataset, canonicalize, load_dataset, save_dataset
from .knowledge_base import (
    BenchmarkTable,
    ConfidenceTable,
    SelfEvalBank,
    attach_properties,
    build_confidence,
    empirical_ranking,
    hit_rate,
    kendall_tau,
    load_bank,
    load_confidence,
    read_bench_csv,
    save_bank,
    save_confidence,
    statistical_ranking,
    transfer_scores,
    write_bench_csv,
)
from .llm_bridge import (
    LlmBackend,
    LlmLog,
    build_prompt,
    elicit_weights,
    parse_architecture,
    parse_weight_lines,
    refine_mutate,
    suggest_initial,
)
from .pipeline import (
    PipelineConfig,
    Trajectory,
    TrajectoryEntry,
    random_search_baseline,
    rank_percentile,
    run_design,
    run_initial,
    run_refinement,
)
from .properties import (
    PROPERTY_NAMES,
    SAMPLED_PROPERTIES,
    PropertyVector,
    SamplingConfig,
    compute_properties,
    eigenvector_stats,
    load_properties,
    save_properties,
)
from .search_space import (
    MACRO_PATTERNS,
    NUM_SLOTS,
    OPERATIONS,
    SPACE_SIZE,
    Architecture,
    check_valid,
    crossover,
    enumerate_space,
    format_key,
    hamming,
    mutate_one,
    parse_key,
    validate,
)
from .seeding import fold_seed
from .similarity import (
    KnowledgePool,
    PoolEntry,
    SimilarityScore,
    WeightVector,
    build_pool,
    combine_terms,
    load_pool,
    loo_property_similarity,
    norm_bounds,
    rank_sources,
    save_pool,
    similarity_score,
    uniform_weights,
)

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "BackendError",
    "BenchmarkTable",
    "ConfidenceTable",
    "DataError",
    "DatasetMeta",
    "EvalRequest",
    "EvalResult",
    "ExternalEvaluator",
    "FileFormatError",
    "GnarchError",
    "GraphDataset",
    "KnowledgePool",
    "LeakageGuardError",
    "LlmBackend",
    "LlmLog",
    "LookupEvaluator",
    "MACRO_PATTERNS",
    "NUM_SLOTS",
    "OPERATIONS",
    "PipelineConfig",
    "PoolEntry",
    "PropertyVector",
    "PROPERTY_NAMES",
    "RecordMissingError",
    "SAMPLED_PROPERTIES",
    "SPACE_SIZE",
    "SamplingConfig",
    "SelfEvalBank",
    "SimilarityScore",
    "Trajectory",
    "TrajectoryEntry",
    "TrainerConfig",
    "TrainerProtocolError",
    "WeightVector",
    "attach_properties",
    "build_confidence",
    "build_pool",
    "build_prompt",
    "canonicalize",
    "check_valid",
    "combine_terms",
    "compute_properties",
    "crossover",
    "eigenvector_stats",
    "elicit_weights",
    "empirical_ranking",
    "enumerate_space",
    "evaluate_external",
    "evaluate_lookup",
    "fold_seed",
    "format_key",
    "hamming",
    "hit_rate",
    "hyperparams_for",
    "kendall_tau",
    "load_bank",
    "load_confidence",
    "load_dataset",
    "load_pool",
    "load_properties",
    "loo_property_similarity",
    "mutate_one",
    "norm_bounds",
    "parse_architecture",
    "parse_key",
    "parse_weight_lines",
    "random_search_baseline",
    "rank_percentile",
    "rank_sources",
    "read_bench_csv",
    "refine_mutate",
    "run_design",
    "run_initial",
    "run_refinement",
    "save_bank",
    "save_confidence",
    "save_dataset",
    "save_pool",
    "save_properties",
    "similarity_score",
    "statistical_ranking",
    "suggest_initial",
    "transfer_scores",
    "uniform_weights",
    "validate",
    "write_bench_csv",
]
