//! Value-pacing equilibria for budget-constrained bidders in contextual
//! first-price auctions.
//!
//! A buyer with weight vector `w` and budget `B` values item `alpha` at
//! `w^T alpha` and bids through a multiplicative pacing multiplier `t`,
//! shading her value to `w^T alpha / (1 + t)`. This crate computes the
//! per-type dual-optimal multipliers, runs best-response dynamics over
//! pacing profiles to find approximate equilibria, checks the structural
//! properties such equilibria must satisfy (budget feasibility,
//! monotonicity in types, colinear collapse), and verifies revenue
//! equivalence across standard auction formats both analytically and by
//! Monte Carlo simulation.

pub mod auctions;
pub mod dist;
pub mod dual;
pub mod generate;
pub mod instance;
pub mod jsonio;
pub mod market;
pub mod solver;

pub use auctions::{
    bid_oracle, expected_payment, interim_utility, revenue_equivalence_report, simulate_revenue,
    AuctionError, AuctionFormat, FormatRevenue, RevenueReport, SimulatedRevenue,
};
pub use dist::{
    cdf_integral, highest_competitor_distribution, paced_value, paced_value_distribution, sigma,
    AnalyticCdf, StepCdf, ValueDistribution,
};
pub use dual::{BestResponseResult, DualItemView, DualProblem};
pub use generate::{arc_budget, gen_arc_instance, gen_grid_instance};
pub use instance::{
    validate_instance, AuctionInstance, BuyerAtom, InstanceError, ItemAtom, PacingProfile,
    RawInstance,
};
pub use market::PacedMarket;
pub use solver::{
    best_response_step, check_budgets, check_colinear_pacing, check_monotonicity,
    population_dual_objective, solve_equilibrium, BudgetCheck, ColinearGroup, ColinearReport,
    EquilibriumReport, MonotonicityReport, MonotonicityViolation, SolveDiagnostics, SolveOptions,
};
