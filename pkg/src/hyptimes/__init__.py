"""Hyperbolic time detection and ergodic statistics for 1-d maps.

The package centres on a streaming detector for (sigma, delta)-hyperbolic
times of nonuniformly expanding interval and circle maps with singular
sets, plus the supporting machinery: map models with exact singular-set
geometry, a vectorised ensemble engine that reproduces the scalar
detector bit for bit, quadrature for the -log dist observables, a slow
recurrence sequence with divergent Birkhoff-type partial sums, and
figure/report writers.  ``hyptimes.cli`` exposes the same operations as
a command line tool.
"""

from .detector import (
    BackwardContractionReport,
    BackwardSweepResult,
    DistortionReport,
    HyperbolicTimeRecord,
    OrbitTrace,
    check_backward_contraction,
    check_bounded_distortion,
    first_hyperbolic_time,
    generate_orbit,
    hyperbolic_times_stream,
    is_hyperbolic_time_naive,
    naive_hyperbolic_times,
    sweep_backward_contraction,
    write_record_json,
    write_trace_csv,
)
from .ensemble import (
    DensityProbe,
    EnsembleConfig,
    EnsembleReport,
    TailDiagnostic,
    birkhoff_average,
    orbit_rng,
    pushforward_density_probe,
    run_ensemble,
    slow_recurrence_average,
    tail_growth_diagnostic,
    transfer_identity_check,
)
from .maps import (
    Branch,
    HyperbolicParams,
    MapModel,
    NonDegeneracyParams,
    NonDegeneracyReport,
    check_nondegeneracy,
    default_b,
    make_map,
    registered_map_names,
)
from .metadata import TOOL_NAME, VERSION
from .quadrature import QuadratureResult, integral_log_dist, rise_pieces
from .recurrence import (
    DivergenceReport,
    DivergenceRow,
    GapSequence,
    InductionReport,
    check_induction_bound,
    iterate_gap,
    partial_sum_divergence,
    write_gap_csv,
)

__version__ = VERSION

__all__ = [
    "TOOL_NAME",
    "VERSION",
    "__version__",
    # maps
    "Branch",
    "HyperbolicParams",
    "MapModel",
    "NonDegeneracyParams",
    "NonDegeneracyReport",
    "check_nondegeneracy",
    "default_b",
    "make_map",
    "registered_map_names",
    # detector
    "BackwardContractionReport",
    "BackwardSweepResult",
    "DistortionReport",
    "HyperbolicTimeRecord",
    "OrbitTrace",
    "check_backward_contraction",
    "check_bounded_distortion",
    "first_hyperbolic_time",
    "generate_orbit",
    "hyperbolic_times_stream",
    "is_hyperbolic_time_naive",
    "naive_hyperbolic_times",
    "sweep_backward_contraction",
    "write_record_json",
    "write_trace_csv",
    # ensemble
    "DensityProbe",
    "EnsembleConfig",
    "EnsembleReport",
    "TailDiagnostic",
    "birkhoff_average",
    "orbit_rng",
    "pushforward_density_probe",
    "run_ensemble",
    "slow_recurrence_average",
    "tail_growth_diagnostic",
    "transfer_identity_check",
    # quadrature
    "QuadratureResult",
    "integral_log_dist",
    "rise_pieces",
    # recurrence
    "DivergenceReport",
    "DivergenceRow",
    "GapSequence",
    "InductionReport",
    "check_induction_bound",
    "iterate_gap",
    "partial_sum_divergence",
    "write_gap_csv",
]
