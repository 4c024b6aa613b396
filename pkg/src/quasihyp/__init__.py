"""Quasi-hyperbolicity constants and four-point invariants of metric spaces."""

from .exceptions import (
    DomainError,
    MetricViolationError,
    ParseError,
    QuasiHypError,
    ShapeError,
    SizeError,
    UndefinedRatioError,
)
from .invariants import (
    BoundCertificate,
    FourPointReport,
    Provenance,
    Quadruple,
    c0_finite,
    delta_hyp_finite,
    delta_ratio,
    embedding_bound,
    four_point_report,
    gr_alpha,
    gromov_product,
    hyp_defect,
    james_lower_bound,
    midpoint_lower_bound,
    mu_delta_check,
    norm_round_check,
    p_round_defect,
    ptolemy_defect,
    roundness_finite,
    ultra_lemma_check,
)
from .optimize import (
    F_of,
    G_of,
    LineflakeSolution,
    OptimizationResult,
    diagonal_crossing,
    estimate_c,
    f_alpha,
    lineflake_constant,
    maximize_delta,
    root_m,
    snowflake_line,
)
from .spaces import (
    EuclideanLine,
    FiniteMatrix,
    FiniteMetricSpace,
    GraphVm,
    HalfLineAlpha,
    HyperbolicPlane,
    LpSpace,
    Snowflake,
    SpaceSpec,
    distance,
    restrict,
    sample,
    validate_metric,
)

__version__ = "0.1.0"
