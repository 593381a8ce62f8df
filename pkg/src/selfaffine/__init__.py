"""Random box-like self-affine functions.

Construct random functions on [0, 1] whose graphs are box-like
self-affine sets, solve for the almost-sure box-counting dimension of
the graph, classify almost-everywhere differentiability by the drift
functional phi, and validate both numerically: box-count regression,
covering-martingale diagnostics, and digit-drift probes.
"""

from .analysis import (
    BoxCountResult,
    DriftProbe,
    MartingaleDiagnostics,
    MartingaleTrace,
    SandwichResult,
    StoppingSet,
    box_count,
    build_stopping_set,
    drift_probe,
    estimate_dimension,
    martingale_diagnostics,
    martingale_trace,
    partition_identity_check,
    required_depth,
    sandwich_check,
    stopping_cover,
    stopping_weights,
)
from .errors import (
    ConfigurationError,
    ContractViolationError,
    FitError,
    InsufficientDepthError,
    ResourceLimitError,
    SolverBracketError,
)
from .heightlaw import (
    CustomSampler,
    Deterministic,
    HeightLaw,
    IidBeta,
    IidUniform,
    LawReport,
    MirroredBeta,
    RatioMoments,
    SampleVector,
    moments,
    okamoto_law,
    sample,
    validate,
)
from .realization import (
    GraphApprox,
    RealizationTree,
    SvgOptions,
    export_csv,
    export_json,
    graph_points,
    iter_levels,
    render_svg,
    sample_tree,
)
from .symbolic import (
    Partition,
    Word,
    code_point,
    coding,
    level_bases,
    level_widths,
    successor,
    word_base,
    word_interval,
    word_log_width,
    word_width,
)
from .theory import (
    CLASS_DIFFERENTIABLE,
    CLASS_INCONCLUSIVE,
    CLASS_NON_DIFFERENTIABLE,
    DiffReport,
    DimensionReport,
    SensitivityReport,
    compute_phi,
    dimension_gap,
    dimension_sensitivity,
    okamoto_dimension,
    solve_dimension,
    uniform_law_dimension,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # symbolic
    "Partition", "Word", "word_base", "word_width", "word_log_width",
    "word_interval", "successor", "code_point", "coding",
    "level_bases", "level_widths",
    # height laws
    "HeightLaw", "Deterministic", "IidUniform", "IidBeta", "MirroredBeta",
    "CustomSampler", "SampleVector", "RatioMoments", "LawReport",
    "sample", "moments", "validate", "okamoto_law",
    # theory
    "CLASS_DIFFERENTIABLE", "CLASS_NON_DIFFERENTIABLE", "CLASS_INCONCLUSIVE",
    "DiffReport", "DimensionReport", "SensitivityReport",
    "compute_phi", "dimension_gap", "solve_dimension",
    "dimension_sensitivity", "okamoto_dimension", "uniform_law_dimension",
    # realization
    "RealizationTree", "GraphApprox", "SvgOptions",
    "sample_tree", "iter_levels", "graph_points",
    "export_csv", "export_json", "render_svg",
    # analysis
    "StoppingSet", "MartingaleTrace", "MartingaleDiagnostics",
    "BoxCountResult", "SandwichResult", "DriftProbe",
    "build_stopping_set", "required_depth", "partition_identity_check",
    "stopping_weights", "martingale_trace", "martingale_diagnostics",
    "box_count", "estimate_dimension", "stopping_cover", "sandwich_check",
    "drift_probe",
    # errors
    "ConfigurationError", "SolverBracketError", "ResourceLimitError",
    "FitError", "InsufficientDepthError", "ContractViolationError",
]
