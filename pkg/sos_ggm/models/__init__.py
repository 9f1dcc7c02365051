# Import key classes and functions for easier access
from sos_ggm.models.polyroots import RealPolynomial, isolate_positive_roots, solve_cubic, solve_quartic_ferrari
from sos_ggm.models.boundary_law import (
    BoundaryLawPair,
    ModelParams,
    critical_values,
    count_solutions,
    solve_generic,
    solve_k2,
    solve_k3,
    solve_zero_field,
)
from sos_ggm.models.external_field import (
    FieldParams,
    FieldSolution,
    classify_region,
    enumerate_measure_candidates,
    solve_field_generic,
    solve_k2_uniform,
)
from sos_ggm.models.ggm_core import (
    PeriodicBoundaryLaw,
    boundary_law_from_pair,
    build_window,
    check_consistency,
    identifiability_check,
    marginal_table,
    mixed_measure,
    normalisability_verdict,
    pinned_measure,
    series_sums,
    transition_kernel,
)
from sos_ggm.models.phase_diagram import PhaseEngine, refine_transition, scan_tau, scan_tau_h

# This makes it possible to import directly from the models package
# For example: from sos_ggm.models import ModelParams, solve_zero_field
