"""Iterated function systems under piecewise-stationary sampling measures.

Simulation (chaos game and exact measure push-forward), Wasserstein-type
distances with certified exact solvers, invariant-measure estimation with
a-posteriori error certificates, and machine-checkable versions of the
contraction, tracking-error, and regret bounds.
"""

__version__ = "0.1.0"

from .backend import BACKEND, has_compiled_kernels
from .bounds import (
    BoundsReport,
    aposteriori_bound,
    contraction_factor,
    geometric_decay_check,
    regret_bound,
    subsequent_invariants_bound,
    tracking_error_bound,
)
from .errors import (
    CertificateError,
    ConfigError,
    ConvergenceFailureError,
    ExactSolverSizeError,
    InvalidInputError,
    NotContractiveError,
)
from .maps import AffineMap, GeneralMap, MapFamily, absorbing_radius, lipschitz_constant
from .measure import (
    DiscreteMeasure,
    ParticleCloud,
    SimulationStream,
    cesaro_average,
    estimate_invariant_measure,
    histogram_density,
    iterate_push_forward,
    push_forward,
    simulate_epoch,
    simulate_path,
)
from .schedule import (
    SamplingMeasure,
    Schedule,
    derive_stream,
    sample_index,
    tv_distance,
    validate_schedule,
)
from .transport import (
    GroundCost,
    total_variation,
    TransportPlan,
    sinkhorn,
    subsampled_w1,
    wasserstein_1d,
    wasserstein_exact,
)

__all__ = [
    "__version__",
    "BACKEND",
    "has_compiled_kernels",
    "AffineMap",
    "GeneralMap",
    "MapFamily",
    "absorbing_radius",
    "lipschitz_constant",
    "SamplingMeasure",
    "Schedule",
    "derive_stream",
    "sample_index",
    "tv_distance",
    "validate_schedule",
    "DiscreteMeasure",
    "ParticleCloud",
    "SimulationStream",
    "cesaro_average",
    "estimate_invariant_measure",
    "histogram_density",
    "iterate_push_forward",
    "push_forward",
    "simulate_epoch",
    "simulate_path",
    "GroundCost",
    "TransportPlan",
    "sinkhorn",
    "total_variation",
    "subsampled_w1",
    "wasserstein_1d",
    "wasserstein_exact",
    "BoundsReport",
    "aposteriori_bound",
    "contraction_factor",
    "geometric_decay_check",
    "regret_bound",
    "subsequent_invariants_bound",
    "tracking_error_bound",
    "InvalidInputError",
    "NotContractiveError",
    "ConvergenceFailureError",
    "ExactSolverSizeError",
    "CertificateError",
    "ConfigError",
]
