"""Gap and sign-change densities of power series, envelope regularizations,
and numerical probes for singularities on the circle of convergence."""

__version__ = "0.1.0"

from .envelope import (
    PwlError,
    PwlFunction,
    SelfSimilarSpec,
    duality_check,
    linear_gap_witness,
    lower_regularization,
    succ,
    upper_regularization,
)
from .seqcore import (
    CoefficientSequence,
    GeneratorSpec,
    GroundTruth,
    IndexSet,
    SequenceError,
    Window,
    WindowFamily,
    WindowPolicy,
    counting,
    extract_windows,
    generate,
    oscillating_profile,
    sign_changes,
    window_counts,
)
from .density import (
    DensityError,
    DensityReport,
    DivergenceVerdict,
    classify_divergence,
    density_report,
    envelope_density,
    gap_integral,
    helly_limits,
    log_average_density,
    max_density,
    truncated_integral,
    window_density,
)
from .analysis import (
    AnalysisError,
    ContourSpec,
    IntervalSet,
    QuadratureError,
    contour_interpolant,
    min_zero_bound,
    multiplicity_audit,
    select_cover,
    verify_zero_bound,
)
from .probe import (
    Detection,
    PadeResult,
    ProbeError,
    ProbeReport,
    TruncationError,
    arc_consistency,
    detections_from_pade,
    pade_poles,
    ray_growth,
)
