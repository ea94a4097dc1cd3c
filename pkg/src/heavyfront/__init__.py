"""Numerical laboratory for accelerating invasion fronts.

Nonlocal growth-dispersal equations with heavy-tailed kernels move their
level sets superlinearly; this package discretizes the dynamics, inverts
tail laws into front-position predictions, and cross-checks the two with
reproducible diagnostics.

Modules
-------
``tails``
    Analytic decay profiles, tail classification, gauge construction.
``convolution``
    Grids, sampled fields, FFT convolution, convolution-power domination.
``frontlaw``
    Front-position laws inverted from tails and their closed forms.
``dynamics``
    Reactions, models, RK4 evolution, linear series solutions.
``analysis``
    Level sets, front sandwiches, barriers, envelopes, order checks.
``scenario`` / ``reports`` / ``cli``
    Config parsing, deterministic artifacts, and the command line.
"""

__version__ = "0.1.0"

from .analysis import (
    AnalysisError,
    ComparisonResult,
    EnvelopeResult,
    FrontTrace,
    SandwichReport,
    SubSolution,
    SubsolutionResult,
    build_subsolution,
    comparison_test,
    front_trace,
    lambda0_for,
    level_set_position,
    sandwich_check,
    verify_subsolution,
    verify_upper_envelope,
)
from .convolution import (
    Constant,
    Grid,
    GridError,
    GridFunction,
    Kernel,
    Zero,
    convolve,
    conv_power,
    gaussian_kernel,
    kernel_from_profile,
    kernel_from_two_sided,
    kesten_density_check,
    kesten_distribution_check,
    laplace_kernel,
    tail_sum,
    uniform_kernel,
)
from .dynamics import (
    DomainExhausted,
    DynamicsError,
    IntegrationError,
    Model,
    NonlocalLogisticReaction,
    Trajectory,
    evolve,
    indicator_initial,
    local_cubic,
    local_logistic,
    series_solution,
    solve_linear,
    step_initial,
    tail_initial,
)
from .frontlaw import (
    FrontLaw,
    FrontLawError,
    check_linear_shift,
    check_superlinear,
    closed_form_for_profile,
    closed_form_front,
)
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario
from .tails import (
    BoundedBelow,
    Side,
    TailError,
    TailProfile,
    TwoSidedTail,
    Verdict,
    classify_tail,
    construct_h,
    exponential,
    log_power_exp,
    power,
    stretched_exp,
    x_over_log,
)

__all__ = [
    "__version__",
    # tails
    "BoundedBelow", "Side", "TailError", "TailProfile", "TwoSidedTail",
    "Verdict", "classify_tail", "construct_h", "exponential",
    "log_power_exp", "power", "stretched_exp", "x_over_log",
    # convolution
    "Constant", "Grid", "GridError", "GridFunction", "Kernel", "Zero",
    "convolve", "conv_power", "gaussian_kernel", "kernel_from_profile",
    "kernel_from_two_sided", "kesten_density_check",
    "kesten_distribution_check", "laplace_kernel", "tail_sum",
    "uniform_kernel",
    # frontlaw
    "FrontLaw", "FrontLawError", "check_linear_shift", "check_superlinear",
    "closed_form_for_profile", "closed_form_front",
    # dynamics
    "DomainExhausted", "DynamicsError", "IntegrationError", "Model",
    "NonlocalLogisticReaction", "Trajectory", "evolve", "indicator_initial",
    "local_cubic", "local_logistic", "series_solution", "solve_linear",
    "step_initial", "tail_initial",
    # analysis
    "AnalysisError", "ComparisonResult", "EnvelopeResult", "FrontTrace",
    "SandwichReport", "SubSolution", "SubsolutionResult",
    "build_subsolution", "comparison_test", "front_trace", "lambda0_for",
    "level_set_position", "sandwich_check", "verify_subsolution",
    "verify_upper_envelope",
    # scenario
    "Scenario", "ScenarioError", "load_scenario", "parse_scenario",
]
