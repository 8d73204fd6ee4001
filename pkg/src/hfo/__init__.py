"""hfo: online HPC job-failure prediction at desk scale.

Relabel job traces from exit codes, encode submit-time features (dense
integer dictionaries or 384-dim string embeddings), train six predictors,
and evaluate them offline (chronological split) or online (sliding-window
retraining) with strict no-leakage guarantees.
"""

from .encoding import (
    Encoding,
    ExternalEmbedder,
    FeatureVector,
    HashEmbedder,
    IntEncoder,
    SbEncoder,
    hash_embed,
    render_job_string,
)
from .errors import (
    ConfigError,
    DimensionError,
    EmbedderUnavailable,
    EmptyEvaluation,
    EmptyTraining,
    EmptyTrace,
    HfoError,
    LeakageError,
    ParseError,
    TraceIOError,
    UnfinishedJob,
    ValidationError,
)
from .evaluation import (
    ClassMetrics,
    ConfusionCounts,
    MeanMetrics,
    MetricsReport,
    MonthlyMetrics,
    aggregate_monthly,
    compute_metrics,
    confusion_from_labels,
)
from .generator import GeneratorConfig, GeneratorStats, generate, generate_with_stats
from .harness import (
    DriftComparison,
    DriftEntry,
    EvalReport,
    OfflineConfig,
    OnlineConfig,
    TimingStats,
    display_name,
    inject_drift_experiment,
    run_offline,
    run_online,
)
from .learners import (
    LABEL_COMPLETED,
    LABEL_FAILED,
    ClassifierSpec,
    Distance,
    KnnModel,
    ModelKind,
    extend_reference_set,
    fit_model,
    load_model,
    predict,
    predict_matrix,
    save_model,
)
from .trace import (
    AuditReport,
    Excluded,
    ExitOutcome,
    JobRecord,
    JobState,
    LabeledJob,
    audit_labels,
    month_key,
    monthly_distribution,
    relabel,
)
from .trace_io import TraceFile, TraceFormat, read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # trace model
    "JobRecord",
    "JobState",
    "ExitOutcome",
    "LabeledJob",
    "Excluded",
    "AuditReport",
    "relabel",
    "audit_labels",
    "month_key",
    "monthly_distribution",
    # io + generation
    "TraceFile",
    "TraceFormat",
    "read_trace",
    "write_trace",
    "GeneratorConfig",
    "GeneratorStats",
    "generate",
    "generate_with_stats",
    # encoding
    "Encoding",
    "FeatureVector",
    "IntEncoder",
    "SbEncoder",
    "HashEmbedder",
    "ExternalEmbedder",
    "hash_embed",
    "render_job_string",
    # learners
    "ClassifierSpec",
    "LABEL_COMPLETED",
    "LABEL_FAILED",
    "ModelKind",
    "Distance",
    "KnnModel",
    "fit_model",
    "predict",
    "predict_matrix",
    "extend_reference_set",
    "save_model",
    "load_model",
    # evaluation
    "ConfusionCounts",
    "ClassMetrics",
    "MetricsReport",
    "MonthlyMetrics",
    "MeanMetrics",
    "compute_metrics",
    "confusion_from_labels",
    "aggregate_monthly",
    # harness
    "OfflineConfig",
    "OnlineConfig",
    "EvalReport",
    "TimingStats",
    "run_offline",
    "run_online",
    "inject_drift_experiment",
    "DriftComparison",
    "DriftEntry",
    "display_name",
    # errors
    "HfoError",
    "ConfigError",
    "ParseError",
    "ValidationError",
    "TraceIOError",
    "EmptyTrace",
    "UnfinishedJob",
    "EmptyTraining",
    "EmptyEvaluation",
    "DimensionError",
    "EmbedderUnavailable",
    "LeakageError",
]
