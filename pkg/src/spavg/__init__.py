"""Averaging analysis of singularly perturbed ODEs with oscillating fast dynamics.

The package simulates the full two-time-scale system, its boundary layer and
its reduced average system, builds the piecewise approximation scheme used in
the closeness-of-solutions analysis, and evaluates the associated error bounds
in overflow-safe arithmetic.
"""

from spavg.model import (
    AttractorSpec,
    DomainError,
    DomainSpec,
    SystemSpec,
    builtin_example,
    eval_rhs_full,
    example_boundary_closed_form,
    get_system,
    register_system,
)
from spavg.integrate import (
    IntegrationError,
    IntegratorConfig,
    Trajectory,
    integrate_boundary_layer,
    integrate_full,
    integrate_reduced,
)
from spavg.logreal import LogReal
from spavg.averaging import (
    AverageResult,
    GammaEnvelope,
    build_fav_field,
    check_average_well_defined,
    compute_fav,
    estimate_gamma,
)
from spavg.scheme import (
    EpsGrid,
    SchemeRun,
    build_time_grid,
    construct_xi_y,
    error_signals,
    scheme_limit,
    solve_Seps,
)
from spavg.bounds import (
    BoundReport,
    ConstantSet,
    bound_report,
    check_gamma_condition,
    d_bar,
    delta_bar,
    eps_bar,
    eps_double_star,
    f_eps,
    k_eps,
)
from spavg.constants import (
    estimate_bound_P,
    estimate_lav,
    estimate_lipschitz,
    fit_exponential_decay,
)
from spavg.experiments import (
    SweepResult,
    closeness_sweep,
    fit_order,
    reproduce_figures,
)

__version__ = "0.1.0"
