//! The textual game file format (JSON).
//!
//! Rationals are strings ("1", "11/20") and parse bit-exactly; see
//! docs/formats.md for the grammar. States in the target set may omit their
//! rewards and kernel blocks — the process stops there and never reads them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::goal::GoalVector;
use crate::model::{GameModel, StageBuilder, StageModel};
use crate::rational::Rational;

#[derive(Serialize, Deserialize)]
struct StageFile {
    states: Vec<String>,
    /// state -> one action list per player
    actions: BTreeMap<String, Vec<Vec<String>>>,
    /// state -> joint action key ("a b c") -> one reward per player
    #[serde(default)]
    rewards: BTreeMap<String, BTreeMap<String, Vec<Rational>>>,
    /// state -> joint action key -> next state -> probability
    #[serde(default)]
    kernel: BTreeMap<String, BTreeMap<String, BTreeMap<String, Rational>>>,
}

#[derive(Serialize, Deserialize)]
struct GameFile {
    num_players: usize,
    target_set: Vec<String>,
    #[serde(default)]
    initial_goals: Vec<Vec<Rational>>,
    prefix: Vec<StageFile>,
    tail: StageFile,
}

fn stage_to_file(stage: &StageModel) -> StageFile {
    let mut actions = BTreeMap::new();
    let mut rewards = BTreeMap::new();
    let mut kernel = BTreeMap::new();
    for (si, state) in stage.states().iter().enumerate() {
        actions.insert(state.clone(), stage.cell(si).actions.clone());
        let mut state_rewards = BTreeMap::new();
        let mut state_kernel = BTreeMap::new();
        for joint in stage.joints(si) {
            let ji = stage.joint_index(si, &joint);
            let key = stage.joint_label(si, &joint);
            if let Some(r) = &stage.cell(si).rewards[ji] {
                state_rewards.insert(key.clone(), r.clone());
            }
            if let Some(row) = &stage.cell(si).kernel[ji] {
                let map: BTreeMap<String, Rational> = row.iter().cloned().collect();
                state_kernel.insert(key, map);
            }
        }
        if !state_rewards.is_empty() {
            rewards.insert(state.clone(), state_rewards);
        }
        if !state_kernel.is_empty() {
            kernel.insert(state.clone(), state_kernel);
        }
    }
    StageFile {
        states: stage.states().to_vec(),
        actions,
        rewards,
        kernel,
    }
}

/// Serialize a model plus its initial goals to the game file format.
pub fn write_game_file(model: &GameModel, initial_goals: &[GoalVector]) -> String {
    let file = GameFile {
        num_players: model.num_players(),
        target_set: model.target_set().iter().cloned().collect(),
        initial_goals: initial_goals
            .iter()
            .map(|g| g.components().to_vec())
            .collect(),
        prefix: model.prefix().iter().map(stage_to_file).collect(),
        tail: stage_to_file(model.tail()),
    };
    serde_json::to_string_pretty(&file).expect("game files serialize") + "\n"
}

fn stage_from_file(file: &StageFile, num_players: usize, label: &str) -> Result<StageModel> {
    let mut b = StageBuilder::new(file.states.clone(), num_players);
    for state in &file.states {
        let lists = file.actions.get(state).ok_or_else(|| {
            Error::GameFile(format!("{label}: state '{state}' has no action lists"))
        })?;
        b.actions(
            state,
            lists.iter().map(|l| l.iter().map(String::as_str).collect::<Vec<_>>()),
        )
        .map_err(|e| Error::GameFile(format!("{label}: {e}")))?;
    }
    for (state, joints) in &file.rewards {
        for (key, values) in joints {
            let parts: Vec<&str> = key.split_whitespace().collect();
            b.reward_parsed(state, &parts, values.clone()).map_err(|e| {
                Error::GameFile(format!("{label}, state '{state}', action '{key}': {e}"))
            })?;
        }
    }
    for (state, joints) in &file.kernel {
        for (key, row) in joints {
            let parts: Vec<&str> = key.split_whitespace().collect();
            let parsed: Vec<(String, Rational)> =
                row.iter().map(|(s, p)| (s.clone(), p.clone())).collect();
            b.kernel_row_parsed(state, &parts, parsed).map_err(|e| {
                Error::GameFile(format!("{label}, state '{state}', action '{key}': {e}"))
            })?;
        }
    }
    Ok(b.build())
}

/// Parse a game file into the model and its declared initial goals.
pub fn parse_game_file(text: &str) -> Result<(GameModel, Vec<GoalVector>)> {
    let file: GameFile = serde_json::from_str(text)?;
    let mut prefix = Vec::with_capacity(file.prefix.len());
    for (n, sf) in file.prefix.iter().enumerate() {
        prefix.push(stage_from_file(sf, file.num_players, &format!("stage {n}"))?);
    }
    let tail = stage_from_file(&file.tail, file.num_players, "tail")?;
    let model = GameModel::new(file.num_players, file.target_set, prefix, tail);
    let goals = file
        .initial_goals
        .iter()
        .map(|g| GoalVector::canonicalize(g))
        .collect();
    Ok((model, goals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;
    use crate::scenarios::insurance::build_insurance_model;

    fn models_equal(a: &GameModel, b: &GameModel) -> bool {
        write_game_file(a, &[]) == write_game_file(b, &[])
    }

    #[test]
    fn insurance_roundtrips_bit_exactly() {
        let (model, goal) = build_insurance_model();
        let text = write_game_file(&model, &[goal.clone()]);
        let (parsed, goals) = parse_game_file(&text).unwrap();
        assert!(validate_model(&parsed).ok);
        assert_eq!(goals, vec![goal]);
        assert!(models_equal(&model, &parsed));
        // A second roundtrip is byte-identical.
        assert_eq!(write_game_file(&parsed, &goals), text);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let (model, goal) = build_insurance_model();
        let text = write_game_file(&model, &[goal]);
        let cut = &text[..text.len() / 2];
        assert!(matches!(parse_game_file(cut), Err(Error::Json(_))));
    }

    #[test]
    fn unknown_action_in_key_is_reported_with_location() {
        let (model, goal) = build_insurance_model();
        let text = write_game_file(&model, &[goal]).replace("a12 b11", "a99 b11");
        let err = parse_game_file(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("a99"), "{msg}");
        assert!(msg.contains("state '1'"), "{msg}");
    }
}
