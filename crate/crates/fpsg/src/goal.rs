//! Residual profit goals and the finite lattice of goals reachable from the
//! initial ones.
//!
//! Goals are clamped at zero: once a player's residual goal reaches zero the
//! criterion is already met (rewards are nonnegative), so all non-positive
//! residuals are value-equivalent. Clamping merges them, which is what keeps
//! the per-stage goal sets finite.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::GameModel;
use crate::rational::Rational;

/// A canonical (componentwise nonnegative) residual goal vector, one entry
/// per player.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoalVector(Vec<Rational>);

impl GoalVector {
    /// Canonical form of a raw goal vector: each component clamped at zero.
    pub fn canonicalize(raw: &[Rational]) -> Self {
        Self(raw.iter().map(Rational::clamp_nonneg).collect())
    }

    pub fn components(&self) -> &[Rational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn component(&self, player: usize) -> &Rational {
        &self.0[player]
    }

    /// Whether player `k`'s residual goal is already met (clamped to zero).
    pub fn is_met(&self, player: usize) -> bool {
        self.0[player].is_zero()
    }

    /// Residual goal after receiving one reward vector, clamped at zero.
    pub fn after_rewards(&self, rewards: &[Rational]) -> Self {
        debug_assert_eq!(rewards.len(), self.0.len());
        Self(
            self.0
                .iter()
                .zip(rewards)
                .map(|(g, r)| (g - r).clamp_nonneg())
                .collect(),
        )
    }
}

/// `canonicalize_goal` as a free function, for symmetry with the rest of the
/// model-construction API.
pub fn canonicalize_goal(raw: &[Rational]) -> GoalVector {
    GoalVector::canonicalize(raw)
}

impl fmt::Display for GoalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for GoalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

impl FromStr for GoalVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let comps: Result<Vec<Rational>, Error> = s.split(',').map(|p| p.trim().parse()).collect();
        Ok(GoalVector::canonicalize(&comps?))
    }
}

/// The goals present at one stage, in sorted order with a reverse index.
#[derive(Clone, Debug)]
pub struct GoalStage {
    goals: Vec<GoalVector>,
    index: HashMap<GoalVector, usize>,
}

impl GoalStage {
    fn from_set(set: BTreeSet<GoalVector>) -> Self {
        let goals: Vec<GoalVector> = set.into_iter().collect();
        let index = goals
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i))
            .collect();
        Self { goals, index }
    }

    pub fn goals(&self) -> &[GoalVector] {
        &self.goals
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn position(&self, goal: &GoalVector) -> Option<usize> {
        self.index.get(goal).copied()
    }
}

/// Per-stage finite sets of reachable (clamped) goal vectors.
///
/// Stage 0 holds the canonicalized initial goals; stage n+1 is the image of
/// stage n under subtraction of every reward vector available at stage n.
#[derive(Clone, Debug)]
pub struct GoalLattice {
    stages: Vec<GoalStage>,
}

impl GoalLattice {
    pub fn horizon(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn stage(&self, n: usize) -> &GoalStage {
        &self.stages[n]
    }

    pub fn stages(&self) -> &[GoalStage] {
        &self.stages
    }
}

/// Forward closure of the initial goals under the goal dynamics, for stages
/// `0..=horizon`.
pub fn build_goal_lattice(
    model: &GameModel,
    initial_goals: &[GoalVector],
    horizon: usize,
) -> GoalLattice {
    let mut stages = Vec::with_capacity(horizon + 1);
    let mut current: BTreeSet<GoalVector> = initial_goals
        .iter()
        .map(|g| GoalVector::canonicalize(g.components()))
        .collect();
    stages.push(GoalStage::from_set(current.clone()));
    for n in 0..horizon {
        let rewards = distinct_reward_vectors(model, n);
        let mut next = BTreeSet::new();
        for goal in &current {
            for r in &rewards {
                next.insert(goal.after_rewards(r));
            }
        }
        if rewards.is_empty() {
            // No decision rows at this stage: goals carry over unchanged.
            next = current.clone();
        }
        stages.push(GoalStage::from_set(next.clone()));
        current = next;
    }
    GoalLattice { stages }
}

/// Distinct reward vectors over all non-target states and joint actions of
/// stage `n`.
fn distinct_reward_vectors(model: &GameModel, n: usize) -> Vec<Vec<Rational>> {
    let stage = model.stage(n);
    let mut set: BTreeSet<Vec<Rational>> = BTreeSet::new();
    for (si, name) in stage.states().iter().enumerate() {
        if model.is_target(name) {
            continue;
        }
        for ji in 0..stage.joint_count(si) {
            if let Ok(r) = stage.rewards(si, ji) {
                set.insert(r.to_vec());
            }
        }
    }
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::insurance::build_insurance_model;
    use proptest::prelude::*;

    fn rat(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn canonicalize_clamps_negative_components() {
        let g = canonicalize_goal(&[rat("3/2"), rat("-1/4")]);
        assert_eq!(g, canonicalize_goal(&[rat("3/2"), rat("0")]));
        assert_eq!(g.to_string(), "3/2,0");
    }

    #[test]
    fn canonicalize_fixed_points() {
        let zero = canonicalize_goal(&[rat("0"), rat("0")]);
        assert_eq!(zero, GoalVector::canonicalize(zero.components()));
        let g = canonicalize_goal(&[rat("2"), rat("3")]);
        assert_eq!(g.components(), &[rat("2"), rat("3")]);
    }

    #[test]
    fn insurance_lattice_stage_one() {
        // Stage-0 reward vectors are (1,1), (0,0), (0,1), (1,1); subtracting
        // them from (2,3) gives three distinct goals.
        let (model, goal) = build_insurance_model();
        let lattice = build_goal_lattice(&model, &[goal], 1);
        let got: Vec<String> = lattice.stage(1).goals().iter().map(|g| g.to_string()).collect();
        assert_eq!(got, vec!["1,2", "2,2", "2,3"]);
    }

    #[test]
    fn lattice_restriction_matches_shorter_horizon() {
        let (model, goal) = build_insurance_model();
        let short = build_goal_lattice(&model, &[goal.clone()], 4);
        let long = build_goal_lattice(&model, &[goal], 5);
        for n in 0..=4 {
            assert_eq!(short.stage(n).goals(), long.stage(n).goals());
        }
    }

    #[test]
    fn zero_initial_goal_stays_zero() {
        let (model, _) = build_insurance_model();
        let zero = canonicalize_goal(&[rat("0"), rat("0")]);
        let lattice = build_goal_lattice(&model, &[zero.clone()], 3);
        for n in 0..=3 {
            assert_eq!(lattice.stage(n).goals(), &[zero.clone()]);
        }
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent(a in -50i64..50, b in -50i64..50) {
            let x = canonicalize_goal(&[Rational::new(a, 7).unwrap(), Rational::new(b, 3).unwrap()]);
            prop_assert_eq!(&GoalVector::canonicalize(x.components()), &x);
        }

        #[test]
        fn canonicalize_preserves_componentwise_order(a in -50i64..50, c in -50i64..50) {
            let x = canonicalize_goal(&[Rational::new(a.min(c), 7).unwrap()]);
            let y = canonicalize_goal(&[Rational::new(a.max(c), 7).unwrap()]);
            prop_assert!(x.component(0) <= y.component(0));
        }
    }
}
