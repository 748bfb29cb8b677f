"""Best constants and extremals of a log-constrained fractional Sobolev
inequality on lattice domains, with their p -> infinity limits."""
from .extremal import ExtremalOptions, ExtremalSolution, solve_extremal
from .geometry import Domain, Interval, InvalidSpecError, Rectangle, build_domain, distance_field
from .limit import LimitOptions, LimitSolution, minimize_holder_quotient
from .nonlocal_ops import (
    SeminormParams,
    frac_p_laplacian,
    gagliardo_seminorm_log,
    holder_seminorm,
    linf_minus,
    linf_plus,
)
from .sweep import ExperimentConfig, audit_inequalities, load_config, run_p_sweep
from .weights import Weight, build_xi, geometric_mean_k, normalize_weight, weight_from_spec

__version__ = "0.1.0"
