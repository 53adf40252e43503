"""Equilibrium dynamics of two-period OLG economies, their two-cycle
counterparts with infinitely-lived agents, and rational bubble diagnostics."""

from .errors import (
    BracketFailure,
    ConfigError,
    HorizonExceeded,
    InfeasibleTerminal,
    InvalidInput,
    MultipleRoots,
    NonEquilibriumPath,
    NonPositiveCapital,
    NonPositiveConsumption,
    OLGError,
    PatternViolation,
    RegimeMismatch,
)
from .primitives import (
    EconomyParams,
    SequenceSpec,
    Technology,
    Utility,
    sequence_eval,
    steady_state_and_gamma,
    technology_eval,
    utility_marginal,
)
from .simulator import (
    EquilibriumPath,
    State,
    build_path,
    olg_step,
    olg_step_exchange,
    residual_report,
    simulate_olg,
)
from .bubbles import (
    BubbleReport,
    bubble_component_path,
    discount_factor,
    discount_factors,
    fundamental_value,
    montrucchio_classify,
)
from .bridge import (
    TwoCycleAllocation,
    VerificationReport,
    check_side_conditions,
    map_olg_to_two_cycle,
    prices_from_path,
    project_two_cycle_to_olg,
    verify_two_cycle_full,
)
from .scenarios import (
    ScenarioResult,
    cobb_douglas_bubble_path,
    condition17_ratio,
    critical_bubble,
    exchange_log_dividend_path,
    fiat_continuum_path,
    fiat_stationary_price,
    linear_tech_path,
)
from .oracle import (
    TruncatedProblem,
    best_response_search,
    candidate_plan,
    optimality_gap,
    truncated_problem,
)
