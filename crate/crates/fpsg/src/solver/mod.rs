//! Equilibrium search and certification.

pub mod certify;
pub mod compositions;
pub mod params;
pub mod search;

pub use certify::{certify, certify_with_horizon, CertRow, Certificate, CertifyContext, Provenance};
pub use compositions::{composition_count, sample_composition, snap_to_grid, unrank_composition};
pub use params::{enumeration_bound, grid_params, horizon_for, EnumerationBound, SolverParams};
pub use search::{solve_best_response_dynamics, solve_grid, CandidateOrder, SolveOutcome};
