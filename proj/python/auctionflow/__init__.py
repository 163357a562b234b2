"""Python access to the auctionflow bidding and point-process library."""

from ._core import (
    ConfigError,
    DomainError,
    ExpMarketOpportunity,
    FpaSolution,
    NumericError,
    TvBound,
    TuneResult,
    check_uniqueness_conditions,
    expected_conversions_exp,
    expected_spend_exp,
    generate_exponential_landscape,
    landscape_bids,
    lgcp_moments,
    optimal_action_discrete,
    optimal_action_discrete_independent,
    poisson_tail_bound,
    poisson_tail_bound_chernoff,
    run_experiment,
    sample_homogeneous_poisson,
    sample_user_superposition,
    solve_fpa_exponential,
    solve_spa_exponential,
    tune_multiplier,
    tv_bound_general,
    tv_bound_short_interval,
)

__all__ = [name for name in dir() if not name.startswith("_")]
