//! Designing edge weights for networks of boundedly rational agents.
//!
//! Agents on a weighted graph play a binary coordination game and revise
//! their actions by log-linear learning. The crate computes the exact
//! stationary (Gibbs) law of that dynamics, the designer's objective
//! `1/mu(a*) + (rho/2) 1'W1` and its gradient, solves the weight-design
//! program over arbitrary sparsity patterns, and provides the closed-form
//! one-dimensional analysis of the complete-graph case.

mod enumerate;
pub mod error;
pub mod format;
pub mod game;
pub mod gibbs;
pub mod optimize;
pub mod sim;
pub mod sum;
pub mod uniform;

pub use error::{Error, Result};
pub use game::{
    algebraic_connectivity, laplacian, nash_action, pairwise_payoff, potential, utility,
    verify_exact_potential, ActionProfile, Equilibrium, GameParams, SparsityPattern,
    WeightMatrix,
};
pub use gibbs::{
    gibbs_distribution, inverse_prob_one, inverse_prob_zero, objective, objective_gradient,
    objective_with_gradient, GibbsDistribution, ObjectiveValue,
};
pub use optimize::{
    edge_value_symmetrize, optimize_weights, orbit_symmetrize, project_feasible,
    OptimizationResult, SolutionRecord, SolverConfig, StepRule,
};
pub use sim::{
    lll_step, run_chain, tv_distance, AgentSelection, ChainConfig, ChainState,
    EmpiricalDistribution,
};
pub use uniform::{
    beta_threshold, d_star, dw_dbeta, f_prime, f_tilde, solve_uniform, Boundary,
    CoefficientTable, UniformSolution,
};
