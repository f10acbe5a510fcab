//! Randomized Markov multipolicies over (stage, state, residual goal) cells.
//!
//! A policy stores explicit mixed actions for stages `0..horizon` and plays
//! uniformly at random at every later stage. The uniform tail is what makes
//! a finite policy a complete one: beyond the certification horizon the tail
//! choice cannot affect the certified values by more than the truncation
//! bound, so any fixed rule works and uniform is the canonical pick.

use std::borrow::Cow;
use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use crate::bellman::MixedAction;
use crate::error::{Error, Result};
use crate::goal::{GoalLattice, GoalVector};
use crate::model::GameModel;

/// Policy cells for one stage: (state, goal) -> one mixed action per player.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PolicyStage {
    pub cells: BTreeMap<(String, GoalVector), Vec<MixedAction>>,
}

/// One randomized Markov policy per player, each a function of
/// (stage, state, residual goal).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MarkovMultipolicy {
    num_players: usize,
    stages: Vec<PolicyStage>,
}

impl MarkovMultipolicy {
    pub fn new(num_players: usize, stages: Vec<PolicyStage>) -> Self {
        Self {
            num_players,
            stages,
        }
    }

    /// The uniform multipolicy on every lattice cell of stages
    /// `0..horizon`.
    pub fn uniform(model: &GameModel, lattice: &GoalLattice, horizon: usize) -> Self {
        let mut stages = Vec::with_capacity(horizon);
        for n in 0..horizon {
            let stage = model.stage(n);
            let mut cells = BTreeMap::new();
            for (si, state) in stage.states().iter().enumerate() {
                if model.is_target(state) {
                    continue;
                }
                let profile: Vec<MixedAction> = stage
                    .action_counts(si)
                    .into_iter()
                    .map(MixedAction::uniform)
                    .collect();
                for goal in lattice.stage(n).goals() {
                    cells.insert((state.clone(), goal.clone()), profile.clone());
                }
            }
            stages.push(PolicyStage { cells });
        }
        Self {
            num_players: model.num_players(),
            stages,
        }
    }

    /// Build a pure multipolicy by choosing one action per player per cell.
    pub fn pure_from(
        model: &GameModel,
        lattice: &GoalLattice,
        horizon: usize,
        mut choose: impl FnMut(usize, &str, &GoalVector) -> Vec<usize>,
    ) -> Self {
        let mut stages = Vec::with_capacity(horizon);
        for n in 0..horizon {
            let stage = model.stage(n);
            let mut cells = BTreeMap::new();
            for (si, state) in stage.states().iter().enumerate() {
                if model.is_target(state) {
                    continue;
                }
                let counts = stage.action_counts(si);
                for goal in lattice.stage(n).goals() {
                    let picks = choose(n, state, goal);
                    let profile: Vec<MixedAction> = picks
                        .iter()
                        .zip(&counts)
                        .map(|(&a, &c)| MixedAction::point(c, a))
                        .collect();
                    cells.insert((state.clone(), goal.clone()), profile);
                }
            }
            stages.push(PolicyStage { cells });
        }
        Self {
            num_players: model.num_players(),
            stages,
        }
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    /// Number of stages with explicit cells; later stages are uniform.
    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    pub fn stages(&self) -> &[PolicyStage] {
        &self.stages
    }

    pub fn stage_mut(&mut self, n: usize) -> &mut PolicyStage {
        &mut self.stages[n]
    }

    /// The mixed-action profile at a cell. Stages at or beyond the horizon
    /// fall back to the uniform profile.
    pub fn profile_at<'a>(
        &'a self,
        model: &GameModel,
        n: usize,
        state: &str,
        goal: &GoalVector,
    ) -> Result<Cow<'a, [MixedAction]>> {
        if n < self.stages.len() {
            let key = (state.to_string(), goal.clone());
            match self.stages[n].cells.get(&key) {
                Some(profile) => Ok(Cow::Borrowed(profile.as_slice())),
                None => Err(Error::MissingPolicyCell {
                    stage: n,
                    state: state.to_string(),
                    goal: goal.to_string(),
                }),
            }
        } else {
            let stage = model.stage(n);
            let si = stage.state_index(state).ok_or_else(|| Error::UnknownState {
                stage: n,
                state: state.to_string(),
            })?;
            let profile: Vec<MixedAction> = stage
                .action_counts(si)
                .into_iter()
                .map(MixedAction::uniform)
                .collect();
            Ok(Cow::Owned(profile))
        }
    }

    /// Replace player `k`'s mixed action in one cell.
    pub fn set_player_action(
        &mut self,
        n: usize,
        state: &str,
        goal: &GoalVector,
        player: usize,
        action: MixedAction,
    ) -> Result<()> {
        let key = (state.to_string(), goal.clone());
        let cell = self.stages[n]
            .cells
            .get_mut(&key)
            .ok_or_else(|| Error::MissingPolicyCell {
                stage: n,
                state: state.to_string(),
                goal: goal.to_string(),
            })?;
        cell[player] = action;
        Ok(())
    }

    /// Check that every lattice cell of stages `0..horizon` is covered and
    /// every mixed action matches its cell's action count.
    pub fn validate_against(&self, model: &GameModel, lattice: &GoalLattice) -> Result<()> {
        for (n, stage_cells) in self.stages.iter().enumerate() {
            let stage = model.stage(n);
            for (si, state) in stage.states().iter().enumerate() {
                if model.is_target(state) {
                    continue;
                }
                let counts = stage.action_counts(si);
                for goal in lattice.stage(n).goals() {
                    let key = (state.clone(), goal.clone());
                    let profile =
                        stage_cells
                            .cells
                            .get(&key)
                            .ok_or_else(|| Error::MissingPolicyCell {
                                stage: n,
                                state: state.clone(),
                                goal: goal.to_string(),
                            })?;
                    if profile.len() != self.num_players {
                        return Err(Error::InvalidMixedAction(format!(
                            "cell ({state}, {goal}) at stage {n} has {} players",
                            profile.len()
                        )));
                    }
                    for (p, mixed) in profile.iter().enumerate() {
                        if mixed.len() != counts[p] {
                            return Err(Error::InvalidMixedAction(format!(
                                "cell ({state}, {goal}) stage {n} player {p}: {} weights for {} actions",
                                mixed.len(),
                                counts[p]
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Stable fingerprint for cycle detection.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }
}
