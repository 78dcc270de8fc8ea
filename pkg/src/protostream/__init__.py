"""Streaming prototype discovery on a support-standardized sphere.

Calibrate decision thresholds from a labeled support set, then process an
unlabeled query stream one sample at a time, assigning each sample to a
base class, attaching it to an online-born cluster, or creating a new
cluster on the spot.
"""

from .calibration import (
    BaseReferenceBank,
    CalibrationReport,
    LabeledSupportSet,
    ThresholdSet,
    build_class_prototypes,
    calibrate_all,
    calibrate_birth,
    calibrate_create,
    calibrate_routing,
    optimize_balanced_threshold,
    select_base_references,
)
from .engine import (
    DecisionTrace,
    NovelPrototype,
    PrototypeMemory,
    StreamState,
    attach_score,
    birth_statistic,
    route_candidates,
    score_memory,
    step,
    update_birth_threshold,
)
from .errors import (
    BadMagic,
    BadVersion,
    DimMismatch,
    EmptyCandidates,
    EmptyInput,
    FeatureFileError,
    LengthMismatch,
    NoNovelPrototypes,
    ProtostreamError,
    SpecInfeasible,
    TooFewClasses,
    TruncatedFile,
    UnlabeledSupport,
    ZeroVector,
)
from .evaluation import (
    EvalReport,
    StreamResult,
    evaluate_stream,
    greedy_accuracy,
    hungarian_assign,
    retain_top_clusters,
    strict_accuracy,
)
from .geometry import (
    SpaceConfig,
    SupportStats,
    compute_support_stats,
    log_uniform_density,
    standardize,
    standardize_batch,
    vmf_concentration,
)
from .pacf import read_feature_file, write_feature_file
from .synthetic import Benchmark, BenchmarkSpec, generate_benchmark, sample_vmf

__version__ = "0.1.0"

__all__ = [
    "BadMagic",
    "BadVersion",
    "BaseReferenceBank",
    "Benchmark",
    "BenchmarkSpec",
    "CalibrationReport",
    "DecisionTrace",
    "DimMismatch",
    "EmptyCandidates",
    "EmptyInput",
    "EvalReport",
    "FeatureFileError",
    "LabeledSupportSet",
    "LengthMismatch",
    "NoNovelPrototypes",
    "NovelPrototype",
    "ProtostreamError",
    "PrototypeMemory",
    "SpaceConfig",
    "SpecInfeasible",
    "StreamResult",
    "StreamState",
    "SupportStats",
    "ThresholdSet",
    "TooFewClasses",
    "TruncatedFile",
    "UnlabeledSupport",
    "ZeroVector",
    "attach_score",
    "birth_statistic",
    "build_class_prototypes",
    "calibrate_all",
    "calibrate_birth",
    "calibrate_create",
    "calibrate_routing",
    "compute_support_stats",
    "evaluate_stream",
    "generate_benchmark",
    "greedy_accuracy",
    "hungarian_assign",
    "log_uniform_density",
    "optimize_balanced_threshold",
    "read_feature_file",
    "retain_top_clusters",
    "route_candidates",
    "sample_vmf",
    "score_memory",
    "select_base_references",
    "standardize",
    "standardize_batch",
    "step",
    "strict_accuracy",
    "update_birth_threshold",
    "vmf_concentration",
    "write_feature_file",
]
