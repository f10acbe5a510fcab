//! The textual policy file format (JSON).
//!
//! Per stage, per (state, goal) cell, per player: the mixed action as a map
//! from action name to rational weight. Zero weights may be omitted. Goals
//! are comma-joined rational components ("2,3"). Stages at or beyond the
//! stored horizon play uniformly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bellman::MixedAction;
use crate::error::{Error, Result};
use crate::goal::GoalVector;
use crate::model::GameModel;
use crate::policy::{MarkovMultipolicy, PolicyStage};
use crate::rational::Rational;

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    num_players: usize,
    horizon: usize,
    tail_rule: String,
    /// stage -> state -> goal -> per-player {action: weight}
    stages: Vec<BTreeMap<String, BTreeMap<String, Vec<BTreeMap<String, Rational>>>>>,
}

/// Serialize a multipolicy to the policy file format.
pub fn write_policy_file(model: &GameModel, policy: &MarkovMultipolicy) -> String {
    let mut stages = Vec::with_capacity(policy.horizon());
    for (n, stage_cells) in policy.stages().iter().enumerate() {
        let stage = model.stage(n);
        let mut by_state: BTreeMap<String, BTreeMap<String, Vec<BTreeMap<String, Rational>>>> =
            BTreeMap::new();
        for ((state, goal), profile) in &stage_cells.cells {
            let si = stage.state_index(state).expect("policy states exist");
            let per_player: Vec<BTreeMap<String, Rational>> = profile
                .iter()
                .enumerate()
                .map(|(p, mixed)| {
                    mixed
                        .weights()
                        .iter()
                        .enumerate()
                        .filter(|(_, w)| !w.is_zero())
                        .map(|(a, w)| (stage.actions(si, p)[a].clone(), w.clone()))
                        .collect()
                })
                .collect();
            by_state
                .entry(state.clone())
                .or_default()
                .insert(goal.to_string(), per_player);
        }
        stages.push(by_state);
    }
    let file = PolicyFile {
        num_players: policy.num_players(),
        horizon: policy.horizon(),
        tail_rule: "uniform".into(),
        stages,
    };
    serde_json::to_string_pretty(&file).expect("policy files serialize") + "\n"
}

/// Parse a policy file against its model.
pub fn parse_policy_file(text: &str, model: &GameModel) -> Result<MarkovMultipolicy> {
    let file: PolicyFile = serde_json::from_str(text)?;
    if file.num_players != model.num_players() {
        return Err(Error::PolicyFile(format!(
            "policy is for {} players, model has {}",
            file.num_players,
            model.num_players()
        )));
    }
    if file.tail_rule != "uniform" {
        return Err(Error::PolicyFile(format!(
            "unsupported tail rule '{}'",
            file.tail_rule
        )));
    }
    if file.stages.len() != file.horizon {
        return Err(Error::PolicyFile(format!(
            "horizon {} but {} stage blocks",
            file.horizon,
            file.stages.len()
        )));
    }
    let mut stages = Vec::with_capacity(file.horizon);
    for (n, by_state) in file.stages.iter().enumerate() {
        let stage = model.stage(n);
        let mut cells = BTreeMap::new();
        for (state, by_goal) in by_state {
            let si = stage.state_index(state).ok_or_else(|| {
                Error::PolicyFile(format!("stage {n}: unknown state '{state}'"))
            })?;
            for (goal_str, per_player) in by_goal {
                let goal: GoalVector = goal_str.parse()?;
                if per_player.len() != model.num_players() {
                    return Err(Error::PolicyFile(format!(
                        "stage {n}, cell ({state}, {goal_str}): {} players",
                        per_player.len()
                    )));
                }
                let mut profile = Vec::with_capacity(per_player.len());
                for (p, weights) in per_player.iter().enumerate() {
                    let names = stage.actions(si, p);
                    let mut dense = vec![Rational::zero(); names.len()];
                    for (action, w) in weights {
                        let a = names.iter().position(|x| x == action).ok_or_else(|| {
                            Error::PolicyFile(format!(
                                "stage {n}, cell ({state}, {goal_str}), player {p}: unknown action '{action}'"
                            ))
                        })?;
                        dense[a] = w.clone();
                    }
                    let mixed = MixedAction::new(dense).map_err(|e| {
                        Error::PolicyFile(format!(
                            "stage {n}, cell ({state}, {goal_str}), player {p}: {e}"
                        ))
                    })?;
                    profile.push(mixed);
                }
                cells.insert((state.clone(), goal), profile);
            }
        }
        stages.push(PolicyStage { cells });
    }
    Ok(MarkovMultipolicy::new(file.num_players, stages))
}
