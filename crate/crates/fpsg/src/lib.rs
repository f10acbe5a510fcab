//! Solver library for N-player nonzero-sum, nonstationary discrete-time
//! Markov games under a first-passage reliability criterion: each player
//! maximizes the probability that their accumulated reward reaches a profit
//! goal before the state first enters a target set.
//!
//! The pieces, bottom up:
//!
//! - [`rational`] / [`goal`]: exact arithmetic, goal clamping and the finite
//!   lattice of residual goals reachable from the initial ones.
//! - [`model`]: the eventually-stationary game model (stage prefix plus
//!   repeating tail), validation, and the uniform one-step absorption bound
//!   that drives every truncation estimate.
//! - [`bellman`]: the one-step operators — pure, mixed, and best response.
//! - [`policy`] / [`eval`]: Markov multipolicies and the finite-horizon
//!   backward sweeps computing truncated success probabilities with
//!   certified error bounds, plus two independent oracles (exact trajectory
//!   enumeration and seeded Monte Carlo).
//! - [`solver`]: equilibrium search (grid enumeration, best-response
//!   dynamics) and the certificate that makes any candidate's verdict sound
//!   regardless of how it was found.
//! - [`scenarios`]: generators for the insurance duopoly and the energy
//!   management game.
//! - [`io`]: game/policy file formats and CSV exports.
//!
//! With the default `parallel` feature the sweep cells, Monte Carlo
//! episodes and candidate certifications run on rayon; disable it for a
//! fully sequential build with identical results.

pub mod bellman;
pub mod error;
pub mod eval;
pub mod goal;
pub mod io;
pub mod model;
mod par;
pub mod policy;
pub mod rational;
pub mod scenarios;
pub mod solver;

pub use bellman::{apply_mixed, apply_pure, best_response, CellValueFn, MixedAction};
pub use error::{Error, Result};
pub use eval::{
    enumerate_oracle, evaluate_best_response, evaluate_policy, simulate, truncation_bound,
    truncation_bound_exact, BestResponseEval, StageValues, ValueTable,
};
pub use goal::{build_goal_lattice, canonicalize_goal, GoalLattice, GoalVector};
pub use model::{
    check_divergence, compute_beta, validate_model, Divergence, GameModel, StageBuilder,
    StageModel, ValidationReport,
};
pub use par::set_parallelism;
pub use policy::MarkovMultipolicy;
pub use rational::Rational;
pub use solver::{
    certify, certify_with_horizon, enumeration_bound, grid_params, horizon_for,
    solve_best_response_dynamics, solve_grid, CandidateOrder, Certificate, SolveOutcome,
    SolverParams,
};
