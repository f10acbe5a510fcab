//! Finite-horizon policy evaluation.
//!
//! The backward sweep starts at stage `m` from the indicator of an already
//! met residual goal and applies the one-step operator stage by stage down
//! to 0. The stage-0 entry is the `m`-step truncation of the first-passage
//! success probability; when the uniform absorption bound `beta` is positive
//! the truncation error is at most `(1 - beta)^m / beta`, which is attached
//! to the table.
//!
//! Two independent oracles cross-check the sweep: an exact-rational
//! exhaustive trajectory enumeration that brackets the infinite-horizon
//! value, and a seeded Monte Carlo simulator.

use std::collections::HashMap;

use crate::bellman::{self, CellValueFn};
use crate::error::{Error, Result};
use crate::goal::{GoalLattice, GoalVector};
use crate::model::{compute_beta, GameModel};
use crate::par;
use crate::policy::MarkovMultipolicy;
use crate::rational::Rational;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Values for every (state, goal) cell of one stage, stored densely with
/// hash indexes for the lookups the next sweep stage performs.
#[derive(Clone, Debug)]
pub struct StageValues {
    states: Vec<String>,
    goals: Vec<GoalVector>,
    state_index: HashMap<String, usize>,
    goal_index: HashMap<GoalVector, usize>,
    values: Vec<f64>,
    stage: usize,
}

impl StageValues {
    fn new(states: Vec<String>, goals: Vec<GoalVector>, values: Vec<f64>, stage: usize) -> Self {
        let state_index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let goal_index = goals
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i))
            .collect();
        Self {
            states,
            goals,
            state_index,
            goal_index,
            values,
            stage,
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn goals(&self) -> &[GoalVector] {
        &self.goals
    }

    pub fn get(&self, state: &str, goal: &GoalVector) -> Option<f64> {
        let si = *self.state_index.get(state)?;
        let gi = *self.goal_index.get(goal)?;
        Some(self.values[si * self.goals.len() + gi])
    }

    pub fn at(&self, state_idx: usize, goal_idx: usize) -> f64 {
        self.values[state_idx * self.goals.len() + goal_idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &GoalVector, f64)> + '_ {
        self.states.iter().enumerate().flat_map(move |(si, s)| {
            self.goals
                .iter()
                .enumerate()
                .map(move |(gi, g)| (s.as_str(), g, self.values[si * self.goals.len() + gi]))
        })
    }
}

impl CellValueFn for StageValues {
    fn value(&self, state: &str, goal: &GoalVector) -> Result<f64> {
        self.get(state, goal).ok_or_else(|| Error::MissingLatticeCell {
            stage: self.stage,
            state: state.to_string(),
            goal: goal.to_string(),
        })
    }
}

/// Stage-indexed value table for one player, with the certified truncation
/// bound when the absorption bound is positive.
#[derive(Clone, Debug)]
pub struct ValueTable {
    pub player: usize,
    pub horizon: usize,
    stages: Vec<StageValues>,
    pub bound: Option<f64>,
}

impl ValueTable {
    pub fn stage(&self, n: usize) -> &StageValues {
        &self.stages[n]
    }

    pub fn stages(&self) -> &[StageValues] {
        &self.stages
    }

    /// Stage-0 value at a cell.
    pub fn value_at(&self, state: &str, goal: &GoalVector) -> Option<f64> {
        self.stages[0].get(state, goal)
    }

    /// Truncation bound applying to the values stored at stage `n` (which
    /// are the result of `horizon - n` operator applications).
    pub fn bound_at(&self, n: usize, beta: &Rational) -> Option<f64> {
        truncation_bound(beta, (self.horizon - n) as u32).ok()
    }
}

/// Argmax action lists for each cell of each swept stage.
#[derive(Clone, Debug)]
pub struct ArgmaxStage {
    pub states: Vec<String>,
    pub goals: Vec<GoalVector>,
    pub lists: Vec<Vec<usize>>,
}

impl ArgmaxStage {
    pub fn get(&self, state: &str, goal: &GoalVector) -> Option<&[usize]> {
        let si = self.states.iter().position(|s| s == state)?;
        let gi = self.goals.iter().position(|g| g == goal)?;
        Some(&self.lists[si * self.goals.len() + gi])
    }
}

/// Result of a best-response sweep: the value table plus the greedy policy
/// skeleton (all maximizing actions per cell, stages `0..horizon`).
#[derive(Clone, Debug)]
pub struct BestResponseEval {
    pub table: ValueTable,
    pub argmax: Vec<ArgmaxStage>,
}

fn non_target_states(model: &GameModel, n: usize) -> Vec<String> {
    model
        .stage(n)
        .states()
        .iter()
        .filter(|s| !model.is_target(s))
        .cloned()
        .collect()
}

fn initial_stage(model: &GameModel, lattice: &GoalLattice, player: usize, m: usize) -> StageValues {
    let states = non_target_states(model, m);
    let goals = lattice.stage(m).goals().to_vec();
    let values = states
        .iter()
        .flat_map(|_| {
            goals
                .iter()
                .map(|g| if g.is_met(player) { 1.0 } else { 0.0 })
        })
        .collect();
    StageValues::new(states, goals, values, m)
}

/// Backward sweep skeleton shared by policy evaluation and best response.
/// `step` computes one cell value (plus a per-cell extra) from the next
/// stage's values.
fn backward_sweep<X, F>(
    model: &GameModel,
    lattice: &GoalLattice,
    player: usize,
    m: usize,
    step: F,
) -> Result<(Vec<StageValues>, Vec<Vec<X>>)>
where
    X: Send,
    F: Fn(usize, &str, &GoalVector, &StageValues) -> Result<(f64, X)> + Sync,
{
    if lattice.horizon() < m {
        return Err(Error::InvalidParameter(format!(
            "lattice horizon {} < evaluation horizon {m}",
            lattice.horizon()
        )));
    }
    let mut stages = vec![initial_stage(model, lattice, player, m)];
    let mut extras: Vec<Vec<X>> = Vec::with_capacity(m);
    for n in (0..m).rev() {
        let states = non_target_states(model, n);
        let goals = lattice.stage(n).goals().to_vec();
        let next = stages.last().expect("nonempty");
        let per_state = goals.len();
        let results = par::try_map_indexed(states.len() * per_state, |idx| {
            let state = &states[idx / per_state];
            let goal = &goals[idx % per_state];
            step(n, state, goal, next)
        })?;
        let mut values = Vec::with_capacity(results.len());
        let mut stage_extras = Vec::with_capacity(results.len());
        for (v, x) in results {
            values.push(v);
            stage_extras.push(x);
        }
        stages.push(StageValues::new(states, goals, values, n));
        extras.push(stage_extras);
    }
    stages.reverse();
    extras.reverse();
    Ok((stages, extras))
}

fn bound_for(beta: &Rational, m: usize) -> Option<f64> {
    if beta.is_positive() {
        truncation_bound(beta, m as u32).ok()
    } else {
        None
    }
}

/// Evaluate a multipolicy for `player` by an `m`-step backward sweep.
/// The returned table's stage-0 entries approximate the first-passage
/// success probability from below-within-bound; `bound` is absent (the
/// truncation is uncertified) when the absorption bound is zero.
pub fn evaluate_policy(
    model: &GameModel,
    policy: &MarkovMultipolicy,
    lattice: &GoalLattice,
    player: usize,
    m: usize,
) -> Result<ValueTable> {
    let beta = compute_beta(model);
    evaluate_policy_with_beta(model, policy, lattice, player, m, &beta)
}

/// As [`evaluate_policy`] with a precomputed absorption bound.
pub fn evaluate_policy_with_beta(
    model: &GameModel,
    policy: &MarkovMultipolicy,
    lattice: &GoalLattice,
    player: usize,
    m: usize,
    beta: &Rational,
) -> Result<ValueTable> {
    let (stages, _) = backward_sweep(model, lattice, player, m, |n, state, goal, next| {
        let profile = policy.profile_at(model, n, state, goal)?;
        let v = bellman::apply_mixed(model, n, player, state, goal, &profile, next)?;
        Ok((v, ()))
    })?;
    Ok(ValueTable {
        player,
        horizon: m,
        stages,
        bound: bound_for(beta, m),
    })
}

/// Evaluate the best response of `player` against the other players'
/// policies (player `player`'s own entries in `others` are ignored) by an
/// `m`-step sweep that maximizes at every cell.
pub fn evaluate_best_response(
    model: &GameModel,
    others: &MarkovMultipolicy,
    lattice: &GoalLattice,
    player: usize,
    m: usize,
) -> Result<BestResponseEval> {
    let beta = compute_beta(model);
    evaluate_best_response_with_beta(model, others, lattice, player, m, &beta)
}

/// As [`evaluate_best_response`] with a precomputed absorption bound.
pub fn evaluate_best_response_with_beta(
    model: &GameModel,
    others: &MarkovMultipolicy,
    lattice: &GoalLattice,
    player: usize,
    m: usize,
    beta: &Rational,
) -> Result<BestResponseEval> {
    let (stages, extras) = backward_sweep(model, lattice, player, m, |n, state, goal, next| {
        let profile = others.profile_at(model, n, state, goal)?;
        bellman::best_response(model, n, player, state, goal, &profile, next)
    })?;
    let argmax = stages[..m]
        .iter()
        .zip(extras)
        .map(|(sv, lists)| ArgmaxStage {
            states: sv.states.clone(),
            goals: sv.goals.clone(),
            lists,
        })
        .collect();
    Ok(BestResponseEval {
        table: ValueTable {
            player,
            horizon: m,
            stages,
            bound: bound_for(beta, m),
        },
        argmax,
    })
}

/// The geometric tail `sum_{t >= m} (1 - beta)^t = (1 - beta)^m / beta`.
pub fn truncation_bound(beta: &Rational, m: u32) -> Result<f64> {
    Ok(truncation_bound_exact(beta, m)?.to_f64())
}

/// Exact-rational form of [`truncation_bound`], for exact comparisons in
/// tests and certificates.
pub fn truncation_bound_exact(beta: &Rational, m: u32) -> Result<Rational> {
    if !beta.is_positive() || beta > &Rational::one() {
        return Err(Error::UndefinedBound(beta.to_string()));
    }
    let one_minus = Rational::one() - beta.clone();
    Ok(&one_minus.pow(m) / beta)
}

/// Exhaustively enumerate trajectory prefixes of length at most `horizon`
/// with exact rational path probabilities.
///
/// Returns `(lower, upper)` where `lower` is the mass of paths that entered
/// the target set by `horizon` with the accumulated reward meeting the goal,
/// and `upper` adds the mass of paths still unabsorbed at `horizon` (any of
/// which could still succeed). The infinite-horizon success probability lies
/// in `[lower, upper]`.
pub fn enumerate_oracle(
    model: &GameModel,
    policy: &MarkovMultipolicy,
    state: &str,
    goal: &GoalVector,
    player: usize,
    horizon: usize,
    budget: u64,
) -> Result<(Rational, Rational)> {
    struct Walker<'a> {
        model: &'a GameModel,
        policy: &'a MarkovMultipolicy,
        player: usize,
        horizon: usize,
        budget: u64,
        nodes: u64,
        lower: Rational,
        pending: Rational,
    }

    impl Walker<'_> {
        fn walk(&mut self, n: usize, state: &str, goal: &GoalVector, prob: Rational) -> Result<()> {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::BudgetExceeded(self.budget));
            }
            let model = self.model;
            if model.is_target(state) {
                if goal.is_met(self.player) {
                    self.lower += &prob;
                }
                return Ok(());
            }
            if n == self.horizon {
                self.pending += &prob;
                return Ok(());
            }
            let profile = self.policy.profile_at(model, n, state, goal)?;
            let stage = model.stage(n);
            let si = stage.state_index(state).ok_or_else(|| Error::UnknownState {
                stage: n,
                state: state.to_string(),
            })?;
            for joint in stage.joints(si) {
                let mut weight = Rational::one();
                for (p, &a) in joint.iter().enumerate() {
                    weight = weight * profile[p].weight(a);
                }
                if weight.is_zero() {
                    continue;
                }
                let ji = stage.joint_index(si, &joint);
                let rewards = stage.rewards(si, ji)?;
                let next_goal = goal.after_rewards(rewards);
                let scaled = &prob * &weight;
                for (next_state, p) in stage.kernel_row(si, ji)? {
                    if p.is_zero() {
                        continue;
                    }
                    self.walk(n + 1, next_state, &next_goal, &scaled * p)?;
                }
            }
            Ok(())
        }
    }

    let mut walker = Walker {
        model,
        policy,
        player,
        horizon,
        budget,
        nodes: 0,
        lower: Rational::zero(),
        pending: Rational::zero(),
    };
    walker.walk(0, state, goal, Rational::one())?;
    let upper = &walker.lower + &walker.pending;
    Ok((walker.lower, upper))
}

/// Seeded Monte Carlo estimate of the truncated success probability.
///
/// Episodes run the goal-augmented dynamics under the multipolicy, stop at
/// absorption or after `max_steps`, and count as success exactly when the
/// residual goal is met at stopping time — the same pessimistic truncation
/// as the backward sweep, so the estimator targets the `max_steps`-step
/// value and under-shoots the infinite-horizon one by at most the
/// truncation bound.
///
/// Returns `(estimate, standard_error)`. Deterministic given the seed;
/// episode `e` draws from its own stream, so the result does not depend on
/// scheduling.
pub fn simulate(
    model: &GameModel,
    policy: &MarkovMultipolicy,
    state: &str,
    goal: &GoalVector,
    player: usize,
    episodes: u64,
    max_steps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if episodes == 0 {
        return Err(Error::InvalidParameter("episodes must be >= 1".into()));
    }
    let outcomes = par::try_map_indexed(episodes as usize, |e| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(e as u64);
        run_episode(model, policy, state, goal, player, max_steps, &mut rng)
    })?;
    let successes = outcomes.iter().filter(|&&s| s).count() as f64;
    let estimate = successes / episodes as f64;
    let stderr = (estimate * (1.0 - estimate) / episodes as f64).sqrt();
    Ok((estimate, stderr))
}

fn run_episode(
    model: &GameModel,
    policy: &MarkovMultipolicy,
    start: &str,
    goal: &GoalVector,
    player: usize,
    max_steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    let mut state = start.to_string();
    let mut residual = goal.clone();
    for n in 0..max_steps {
        if model.is_target(&state) {
            break;
        }
        let stage = model.stage(n);
        let si = stage.state_index(&state).ok_or_else(|| Error::UnknownState {
            stage: n,
            state: state.clone(),
        })?;
        let profile = policy.profile_at(model, n, &state, &residual)?;
        let mut joint = Vec::with_capacity(profile.len());
        for mixed in profile.iter() {
            joint.push(sample_index(
                mixed.weights().iter().map(Rational::to_f64),
                rng,
            ));
        }
        let ji = stage.joint_index(si, &joint);
        let rewards = stage.rewards(si, ji)?;
        residual = residual.after_rewards(rewards);
        let row = stage.kernel_row(si, ji)?;
        let pick = sample_index(row.iter().map(|(_, p)| p.to_f64()), rng);
        state = row[pick].0.clone();
    }
    Ok(residual.is_met(player))
}

fn sample_index(weights: impl Iterator<Item = f64>, rng: &mut ChaCha8Rng) -> usize {
    let ws: Vec<f64> = weights.collect();
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, w) in ws.iter().enumerate() {
        acc += w;
        if draw < acc {
            return i;
        }
    }
    ws.len() - 1
}
