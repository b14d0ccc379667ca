"""Wigner-type local-realist inequalities for multi-qubit systems.

Build the inequalities, evaluate them on quantum behaviors from real-plane
projective measurements, bound them exactly over bipartition-local models and
search measurement angles for violations.
"""

__version__ = "0.1.0"

from .errors import InvalidArgument, NoViolationError, NumericalFailure, UnsupportedSize, WLRError
from .inequalities import (
    Bipartition,
    Family,
    Inequality,
    InequalityTerm,
    SvetlichnyFunctional,
    WignerVariant,
    all_cuts,
    canonical_order,
    evaluate,
    evaluate_svetlichny,
    gwi,
    relabel,
    svetlichny,
    theorem1_set,
    wigner_bipartite,
    wlr_from_order,
    wlr_full_set,
    wlr_inequality,
    wlr_variants,
)
from .lhv import (
    DeterministicStrategy,
    MembershipResult,
    enumerate_vertices,
    is_bipartition_local,
    local_vertex_max,
    maximize_over_vertices,
    vertex_behavior,
    vertex_max,
)
from .qcore import (
    AngleTable,
    BehaviorTable,
    CorrelatorTable,
    DensityMatrix,
    PureState,
    StateName,
    behavior,
    correlators,
    joint_probability,
    named_state,
    white_noise_mix,
)
from .search import (
    VIOLATION_EPSILON,
    CertificationReport,
    OptimizerOptions,
    ViolationReport,
    certify,
    optimize_svetlichny,
    optimize_violation,
    scan_min_violation,
    theorem3_closed_form,
    theorem3_constraints_check,
    visibility_threshold,
)
