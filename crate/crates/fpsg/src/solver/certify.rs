//! The equilibrium certificate.
//!
//! A candidate multipolicy is certified by sweeping, for every player, the
//! truncated policy value `u` and the truncated best-response value `v` to
//! the period length, and checking `|u - v| < 3*epsilon/5` at every stage-0
//! cell. A pass proves the candidate is an epsilon-equilibrium: the two
//! truncations each cost less than `epsilon/5`, so the true one-sided gain
//! of any deviation stays below epsilon. Correctness lives entirely in this
//! check — how the candidate was produced is irrelevant.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{
    evaluate_best_response_with_beta, evaluate_policy_with_beta, truncation_bound,
};
use crate::goal::{build_goal_lattice, GoalLattice, GoalVector};
use crate::model::{compute_beta, GameModel};
use crate::policy::MarkovMultipolicy;
use crate::rational::Rational;
use crate::solver::params::{enumeration_bound, grid_params, horizon_for, SolverParams};

/// Gap record for one (player, stage-0 state, goal) cell.
#[derive(Clone, Debug, Serialize)]
pub struct CertRow {
    pub player: usize,
    pub state: String,
    pub goal: GoalVector,
    pub policy_value: f64,
    pub best_response_value: f64,
    pub gap: f64,
}

/// How a certificate came to be.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub strategy: String,
    pub candidate_index: u64,
    pub candidates_tried: u64,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn direct() -> Self {
        Self {
            strategy: "direct".into(),
            candidate_index: 0,
            candidates_tried: 1,
            seed: None,
        }
    }
}

/// Per-cell gaps at the certification horizon, the 3/5-epsilon verdict and
/// the parameters that produced them.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub epsilon: Rational,
    pub beta: Rational,
    pub horizon: usize,
    pub grid_k: u64,
    pub delta: Rational,
    pub truncation_bound: f64,
    pub rows: Vec<CertRow>,
    pub max_gap: f64,
    pub pass: bool,
    pub enumeration_bound_digits: usize,
    pub provenance: Provenance,
    pub guarantee: String,
}

impl Certificate {
    /// The gap threshold `3 * epsilon / 5`.
    pub fn threshold(&self) -> Rational {
        &(&self.epsilon * &Rational::from_int(3)) / &Rational::from_int(5)
    }
}

const GUARANTEE: &str = "pass means: for every checked start cell, no player can raise their \
first-passage success probability by epsilon or more through any unilateral deviation";

/// Precomputed context shared across many certifications of one instance.
pub struct CertifyContext<'a> {
    pub model: &'a GameModel,
    pub params: SolverParams,
    pub lattice: GoalLattice,
    pub bound_digits: usize,
}

impl<'a> CertifyContext<'a> {
    pub fn new(
        model: &'a GameModel,
        initial_goals: &[GoalVector],
        epsilon: &Rational,
    ) -> Result<Self> {
        let beta = compute_beta(model);
        if !beta.is_positive() {
            return Err(Error::AbsorptionBoundZero);
        }
        let horizon = horizon_for(epsilon, &beta)?;
        let params = grid_params(epsilon, model, horizon)?;
        let lattice = build_goal_lattice(model, initial_goals, horizon);
        let bound_digits = enumeration_bound(epsilon, model)?.digits;
        Ok(Self {
            model,
            params,
            lattice,
            bound_digits,
        })
    }

    pub fn horizon(&self) -> usize {
        self.params.horizon
    }

    /// Certify one candidate against this context.
    pub fn certify(&self, policy: &MarkovMultipolicy, provenance: Provenance) -> Result<Certificate> {
        certify_at_horizon(
            self.model,
            &self.lattice,
            policy,
            &self.params,
            self.bound_digits,
            provenance,
        )
    }
}

fn certify_at_horizon(
    model: &GameModel,
    lattice: &GoalLattice,
    policy: &MarkovMultipolicy,
    params: &SolverParams,
    bound_digits: usize,
    provenance: Provenance,
) -> Result<Certificate> {
    let horizon = params.horizon;
    let mut rows = Vec::new();
    let mut max_gap = 0.0f64;
    for player in 0..model.num_players() {
        let u = evaluate_policy_with_beta(model, policy, lattice, player, horizon, &params.beta)?;
        let br = evaluate_best_response_with_beta(
            model,
            policy,
            lattice,
            player,
            horizon,
            &params.beta,
        )?;
        for (state, goal, uv) in u.stage(0).iter() {
            let vv = br
                .table
                .stage(0)
                .get(state, goal)
                .ok_or_else(|| Error::MissingLatticeCell {
                    stage: 0,
                    state: state.to_string(),
                    goal: goal.to_string(),
                })?;
            let gap = (uv - vv).abs();
            max_gap = max_gap.max(gap);
            rows.push(CertRow {
                player,
                state: state.to_string(),
                goal: goal.clone(),
                policy_value: uv,
                best_response_value: vv,
                gap,
            });
        }
    }
    let threshold = &(&params.epsilon * &Rational::from_int(3)) / &Rational::from_int(5);
    let max_gap_exact = Rational::from_f64_exact(max_gap)
        .ok_or_else(|| Error::InvalidParameter("non-finite gap".into()))?;
    let pass = max_gap_exact < threshold;
    Ok(Certificate {
        epsilon: params.epsilon.clone(),
        beta: params.beta.clone(),
        horizon,
        grid_k: params.grid_k,
        delta: params.delta(),
        truncation_bound: truncation_bound(&params.beta, horizon as u32)?,
        rows,
        max_gap,
        pass,
        enumeration_bound_digits: bound_digits,
        provenance,
        guarantee: GUARANTEE.into(),
    })
}

/// Certify a candidate multipolicy at accuracy `epsilon`, checking every
/// stage-0 cell spanned by `initial_goals`.
pub fn certify(
    model: &GameModel,
    initial_goals: &[GoalVector],
    policy: &MarkovMultipolicy,
    epsilon: &Rational,
) -> Result<Certificate> {
    let ctx = CertifyContext::new(model, initial_goals, epsilon)?;
    ctx.certify(policy, Provenance::direct())
}

/// Certify with an explicit horizon override (the gap threshold still comes
/// from `epsilon`). Loosening epsilon at a fixed horizon can only keep a
/// passing verdict passing.
pub fn certify_with_horizon(
    model: &GameModel,
    initial_goals: &[GoalVector],
    policy: &MarkovMultipolicy,
    epsilon: &Rational,
    horizon: usize,
) -> Result<Certificate> {
    let beta = compute_beta(model);
    if !beta.is_positive() {
        return Err(Error::AbsorptionBoundZero);
    }
    let params = SolverParams {
        epsilon: epsilon.clone(),
        beta,
        horizon,
        grid_k: grid_params(epsilon, model, horizon)?.grid_k,
    };
    let lattice = build_goal_lattice(model, initial_goals, horizon);
    let bound_digits = enumeration_bound(epsilon, model)?.digits;
    certify_at_horizon(model, &lattice, policy, &params, bound_digits, Provenance::direct())
}
