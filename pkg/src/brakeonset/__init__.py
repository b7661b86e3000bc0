"""Brake onset estimation for traffic conflicts with a two-piece piecewise linear model."""
from .errors import (
    BrakeOnsetError,
    DegenerateVarianceError,
    DuplicateEventIdError,
    EmptyGridError,
    EmptyWindowError,
    InvalidWindowError,
    ManifestParseError,
    SeriesError,
    UndefinedRateError,
)
from .evaluation import (
    ConfusionCounts,
    Deviation,
    EvalConfig,
    EvalReport,
    MissingDeviation,
    RocCurve,
    amin_filter,
    classify,
    deviation,
    deviation_histogram,
    evaluate_batch,
    pearson_r,
    roc_curve,
)
from .kinematics import (
    KinematicSeries,
    WindowStats,
    argmin_accel,
    jerk_series,
    max_accel,
    min_jerk,
    slice_window,
    window_stats,
)
from .pipeline import (
    AgentType,
    Annotation,
    AnnotationKind,
    Config,
    ConflictEvent,
    MissingReason,
    OnsetResult,
    Outcome,
    WindowConfig,
    detect_brake_onset,
    fit_window,
    run_batch,
)
from .plm import (
    GridConfig,
    GridSpec,
    PlmFit,
    PlmParams,
    build_grid,
    grid_search,
    oracle_fit,
    plm_predict,
    r_squared,
)

__version__ = "0.1.0"
