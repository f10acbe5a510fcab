//! One-step backward operators.
//!
//! `apply_pure` evaluates, for one player, the one-step map that combines the
//! immediate absorption term (reward meets the residual goal, weighted by the
//! one-step probability of entering the target set) with the continuation
//! values at the updated residual goal. `apply_mixed` averages it under a
//! product of mixed actions, and `best_response` maximizes over one player's
//! action simplex — a linear program over a simplex, so the optimum sits at a
//! vertex and a max over pure actions is exact.
//!
//! The reward-meets-goal comparison is done in exact rational arithmetic:
//! the indicator is closed on the left, so the boundary case `r == goal`
//! counts as success and must not be left to float rounding.

use crate::error::{Error, Result};
use crate::goal::GoalVector;
use crate::model::GameModel;
use crate::rational::Rational;

/// Relative tolerance under which two action values tie in `best_response`.
pub const ARGMAX_TIE_TOL: f64 = 1e-12;

/// A mixed action: one weight per action in the cell's declared action list.
/// Weights are exact rationals summing to one; a float image is cached for
/// the evaluation loops.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MixedAction {
    weights: Vec<Rational>,
}

impl MixedAction {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMixedAction("empty weight vector".into()));
        }
        if weights.iter().any(Rational::is_negative) {
            return Err(Error::InvalidMixedAction("negative weight".into()));
        }
        let total: Rational = weights.iter().cloned().sum();
        if total != Rational::one() {
            return Err(Error::InvalidMixedAction(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    pub fn uniform(count: usize) -> Self {
        let w = Rational::new(1, count as i64).expect("count > 0");
        Self {
            weights: vec![w; count],
        }
    }

    pub fn point(count: usize, action: usize) -> Self {
        let mut weights = vec![Rational::zero(); count];
        weights[action] = Rational::one();
        Self { weights }
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, action: usize) -> &Rational {
        &self.weights[action]
    }

    pub fn weight_f64(&self, action: usize) -> f64 {
        self.weights[action].to_f64()
    }

    /// Support as action indices with positive weight.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| w.is_positive())
            .map(|(a, _)| a)
    }
}

/// Continuation values over the next stage's cells. Implementations must
/// return 1 at goals whose player component is already met; the tables built
/// by the evaluation sweeps guarantee that by construction.
pub trait CellValueFn {
    fn value(&self, state: &str, goal: &GoalVector) -> Result<f64>;
}

impl<F> CellValueFn for F
where
    F: Fn(&str, &GoalVector) -> Result<f64>,
{
    fn value(&self, state: &str, goal: &GoalVector) -> Result<f64> {
        self(state, goal)
    }
}

/// One-step value of a joint (pure) action for `player` at stage `n`, state
/// `state`, residual goal `goal`, against continuation values `next`.
pub fn apply_pure(
    model: &GameModel,
    n: usize,
    player: usize,
    state: &str,
    goal: &GoalVector,
    joint: &[usize],
    next: &dyn CellValueFn,
) -> Result<f64> {
    if model.is_target(state) {
        return Err(Error::TargetState(state.to_string()));
    }
    if goal.is_met(player) {
        return Ok(1.0);
    }
    let stage = model.stage(n);
    let si = stage.state_index(state).ok_or_else(|| Error::UnknownState {
        stage: n,
        state: state.to_string(),
    })?;
    let ji = stage.joint_index(si, joint);
    let rewards = stage.rewards(si, ji)?;
    let meets_goal = &rewards[player] >= goal.component(player);
    let next_goal = goal.after_rewards(rewards);

    let mut target_mass = Rational::zero();
    let row = stage.kernel_row(si, ji)?;
    for (j, p) in row {
        if model.is_target(j) {
            target_mass += p;
        }
    }
    let mut value = if meets_goal { target_mass.to_f64() } else { 0.0 };
    for (j, p) in row {
        if !model.is_target(j) {
            value += p.to_f64() * next.value(j, &next_goal)?;
        }
    }
    Ok(value.clamp(0.0, 1.0))
}

/// One-step value under a profile of mixed actions: the product-weighted
/// average of `apply_pure` over the joint support.
pub fn apply_mixed(
    model: &GameModel,
    n: usize,
    player: usize,
    state: &str,
    goal: &GoalVector,
    profile: &[MixedAction],
    next: &dyn CellValueFn,
) -> Result<f64> {
    if model.is_target(state) {
        return Err(Error::TargetState(state.to_string()));
    }
    if goal.is_met(player) {
        return Ok(1.0);
    }
    let stage = model.stage(n);
    let si = stage.state_index(state).ok_or_else(|| Error::UnknownState {
        stage: n,
        state: state.to_string(),
    })?;
    if profile.len() != model.num_players() {
        return Err(Error::InvalidMixedAction(format!(
            "profile has {} entries for {} players",
            profile.len(),
            model.num_players()
        )));
    }
    for (p, mixed) in profile.iter().enumerate() {
        if mixed.len() != stage.actions(si, p).len() {
            return Err(Error::InvalidMixedAction(format!(
                "player {p} mixed action has {} weights for {} actions",
                mixed.len(),
                stage.actions(si, p).len()
            )));
        }
    }
    let mut value = 0.0f64;
    for joint in stage.joints(si) {
        let mut weight = 1.0f64;
        for (p, &a) in joint.iter().enumerate() {
            weight *= profile[p].weight_f64(a);
        }
        if weight == 0.0 {
            continue;
        }
        value += weight * apply_pure(model, n, player, state, goal, &joint, next)?;
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Best response of `player` against the other players' mixed actions: the
/// maximum over the player's pure actions, plus every maximizing action (in
/// declared order, ties resolved within [`ARGMAX_TIE_TOL`] relative
/// tolerance).
pub fn best_response(
    model: &GameModel,
    n: usize,
    player: usize,
    state: &str,
    goal: &GoalVector,
    others: &[MixedAction],
    next: &dyn CellValueFn,
) -> Result<(f64, Vec<usize>)> {
    if model.is_target(state) {
        return Err(Error::TargetState(state.to_string()));
    }
    let stage = model.stage(n);
    let si = stage.state_index(state).ok_or_else(|| Error::UnknownState {
        stage: n,
        state: state.to_string(),
    })?;
    let own_count = stage.actions(si, player).len();
    if goal.is_met(player) {
        return Ok((1.0, (0..own_count).collect()));
    }
    let mut values = Vec::with_capacity(own_count);
    for a in 0..own_count {
        let mut profile: Vec<MixedAction> = others.to_vec();
        profile[player] = MixedAction::point(own_count, a);
        values.push(apply_mixed(model, n, player, state, goal, &profile, next)?);
    }
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = ARGMAX_TIE_TOL * best.abs().max(1.0);
    let argmax: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| (best - v) <= tol)
        .map(|(a, _)| a)
        .collect();
    Ok((best, argmax))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goal::canonicalize_goal;
    use crate::scenarios::insurance::build_insurance_model;
    use proptest::prelude::*;

    fn rat(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn goal(parts: &[&str]) -> GoalVector {
        let comps: Vec<Rational> = parts.iter().map(|p| rat(p)).collect();
        canonicalize_goal(&comps)
    }

    /// Indicator continuation: 1 iff the lookup goal's player-k component is
    /// met.
    fn indicator_next(player: usize) -> impl Fn(&str, &GoalVector) -> Result<f64> {
        move |_: &str, g: &GoalVector| Ok(if g.is_met(player) { 1.0 } else { 0.0 })
    }

    fn const_next(v: f64) -> impl Fn(&str, &GoalVector) -> Result<f64> {
        move |_: &str, _: &GoalVector| Ok(v)
    }

    #[test]
    fn pure_step_hits_goal_boundary_exactly() {
        // Tail stage, player 0, state 1, goal (1, q): the reward 1 meets the
        // goal exactly, absorption contributes 9/20 and the continuation cell
        // is already met, so the value is 9/20 + 11/20 = 1.
        let (model, _) = build_insurance_model();
        let g = goal(&["1", "3"]);
        let v = apply_pure(&model, 1, 0, "1", &g, &[0, 0], &indicator_next(0)).unwrap();
        assert_eq!(v, 0.45 + 0.55 * 1.0);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn pure_step_is_one_at_met_goal() {
        let (model, _) = build_insurance_model();
        let g = goal(&["0", "3"]);
        let v = apply_pure(&model, 1, 0, "1", &g, &[1, 1], &const_next(0.0)).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn pure_step_vanishes_without_reward_or_continuation() {
        let (model, _) = build_insurance_model();
        // Tail rewards for (a12, b11) are (0, 0): no absorption credit for
        // goal 2 and the continuation is identically zero.
        let g = goal(&["2", "3"]);
        let v = apply_pure(&model, 1, 0, "1", &g, &[1, 0], &const_next(0.0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn mixed_reduces_to_pure_at_point_masses() {
        let (model, _) = build_insurance_model();
        let g = goal(&["2", "3"]);
        let next = indicator_next(0);
        for joint in [[0usize, 0], [0, 1], [1, 0], [1, 1]] {
            let profile = vec![MixedAction::point(2, joint[0]), MixedAction::point(2, joint[1])];
            let mixed = apply_mixed(&model, 1, 0, "1", &g, &profile, &next).unwrap();
            let pure = apply_pure(&model, 1, 0, "1", &g, &joint, &next).unwrap();
            assert_eq!(mixed, pure);
        }
    }

    #[test]
    fn mixed_uniform_matches_bruteforce_average() {
        let (model, _) = build_insurance_model();
        let g = goal(&["2", "3"]);
        let next = indicator_next(0);
        let profile = vec![MixedAction::uniform(2), MixedAction::uniform(2)];
        let mixed = apply_mixed(&model, 1, 0, "1", &g, &profile, &next).unwrap();
        let mut acc = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                acc += 0.25 * apply_pure(&model, 1, 0, "1", &g, &[a, b], &next).unwrap();
            }
        }
        assert!((mixed - acc).abs() <= 1e-15);
    }

    #[test]
    fn best_response_enumerates_two_actions() {
        let (model, _) = build_insurance_model();
        let g = goal(&["2", "3"]);
        let next = indicator_next(0);
        let others = vec![MixedAction::uniform(2), MixedAction::point(2, 0)];
        let (v, argmax) = best_response(&model, 1, 0, "1", &g, &others, &next).unwrap();
        let v0 = apply_pure(&model, 1, 0, "1", &g, &[0, 0], &next).unwrap();
        let v1 = apply_pure(&model, 1, 0, "1", &g, &[1, 0], &next).unwrap();
        assert_eq!(v, v0.max(v1));
        assert!(!argmax.is_empty());
    }

    #[test]
    fn best_response_all_actions_tie_at_full_continuation() {
        // Every reward meets the goal and the continuation is identically
        // one, so every action achieves exactly one.
        let (model, _) = crate::solver::test_fixtures::action_independent_model();
        let g = goal(&["1", "1"]);
        let others = vec![MixedAction::uniform(2), MixedAction::uniform(2)];
        let (v, argmax) = best_response(&model, 0, 0, "s", &g, &others, &const_next(1.0)).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(argmax, vec![0, 1]);
    }

    #[test]
    fn singleton_action_set_is_trivial_best_response() {
        let mut b = crate::model::StageBuilder::new(["s", "d"], 1);
        b.actions("s", vec![vec!["only"]]).unwrap();
        b.actions("d", vec![vec!["halt"]]).unwrap();
        b.reward("s", &["only"], &["1/2"]).unwrap();
        b.kernel_row("s", &["only"], &[("s", "1/3"), ("d", "2/3")]).unwrap();
        let model = crate::model::GameModel::new(1, ["d".to_string()], vec![], b.build());
        let g = goal(&["1"]);
        let next = indicator_next(0);
        let only = vec![MixedAction::point(1, 0)];
        let (v, argmax) = best_response(&model, 0, 0, "s", &g, &only, &next).unwrap();
        let direct = apply_mixed(&model, 0, 0, "s", &g, &only, &next).unwrap();
        assert_eq!(v, direct);
        assert_eq!(argmax, vec![0]);
    }

    proptest! {
        /// Monotonicity: raising the continuation values never lowers any
        /// operator output.
        #[test]
        fn operators_are_monotone(lo in 0.0f64..1.0, bump in 0.0f64..0.5, wa in 1u32..9, wb in 1u32..9) {
            let (model, _) = build_insurance_model();
            let g = goal(&["2", "3"]);
            let hi = (lo + bump).min(1.0);
            let low_fn = const_next(lo);
            let high_fn = const_next(hi);
            let w = Rational::new(wa as i64, 9).unwrap();
            let rest = Rational::one() - w.clone();
            let mix = MixedAction::new(vec![w, rest]).unwrap();
            let w2 = Rational::new(wb as i64, 9).unwrap();
            let rest2 = Rational::one() - w2.clone();
            let mix2 = MixedAction::new(vec![w2, rest2]).unwrap();
            let profile = vec![mix.clone(), mix2.clone()];

            let p_lo = apply_pure(&model, 0, 0, "1", &g, &[0, 1], &low_fn).unwrap();
            let p_hi = apply_pure(&model, 0, 0, "1", &g, &[0, 1], &high_fn).unwrap();
            prop_assert!(p_lo <= p_hi + 1e-15);

            let m_lo = apply_mixed(&model, 0, 0, "1", &g, &profile, &low_fn).unwrap();
            let m_hi = apply_mixed(&model, 0, 0, "1", &g, &profile, &high_fn).unwrap();
            prop_assert!(m_lo <= m_hi + 1e-15);
            prop_assert!((0.0..=1.0).contains(&m_lo));

            let (b_lo, _) = best_response(&model, 0, 0, "1", &g, &profile, &low_fn).unwrap();
            let (b_hi, _) = best_response(&model, 0, 0, "1", &g, &profile, &high_fn).unwrap();
            prop_assert!(b_lo <= b_hi + 1e-15);
        }

        /// The best response dominates the value of any sampled mixed action
        /// for the responding player.
        #[test]
        fn best_response_dominates_sampled_mixed(wa in 0u32..=8, wb in 1u32..9) {
            let (model, _) = build_insurance_model();
            let g = goal(&["2", "3"]);
            let next = indicator_next(0);
            let w = Rational::new(wa as i64, 8).unwrap();
            let rest = Rational::one() - w.clone();
            let own = MixedAction::new(vec![w, rest]).unwrap();
            let w2 = Rational::new(wb as i64, 9).unwrap();
            let rest2 = Rational::one() - w2.clone();
            let opp = MixedAction::new(vec![w2, rest2]).unwrap();
            let profile = vec![own.clone(), opp.clone()];
            let sampled = apply_mixed(&model, 0, 0, "1", &g, &profile, &next).unwrap();
            let (best, _) = best_response(&model, 0, 0, "1", &g, &profile, &next).unwrap();
            prop_assert!(best + 1e-12 >= sampled);
        }
    }
}
