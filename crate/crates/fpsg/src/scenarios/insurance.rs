//! The two-company insurance duopoly.
//!
//! Two insurers choose, while the financial market booms (state 1), whether
//! to invest; a slump (state 2) ends the game. Each wants to bank its profit
//! goal before the slump. Stage-0 rewards differ from every later stage, so
//! the model is a one-stage prefix plus a stationary tail.

use crate::goal::{canonicalize_goal, GoalVector};
use crate::model::{GameModel, StageBuilder, StageModel};
use crate::rational::Rational;

fn stage(rewards: [[&str; 2]; 4]) -> StageModel {
    let mut b = StageBuilder::new(["1", "2"], 2);
    b.actions("1", vec![vec!["a11", "a12"], vec!["b11", "b12"]])
        .expect("known state");
    b.actions("2", vec![vec!["a21"], vec!["b21"]]).expect("known state");
    let joints = [["a11", "b11"], ["a11", "b12"], ["a12", "b11"], ["a12", "b12"]];
    let stay = ["11/20", "3/5", "9/20", "3/5"];
    for (i, joint) in joints.iter().enumerate() {
        b.reward("1", joint, &rewards[i]).expect("known joint");
        let leave = (Rational::one() - stay[i].parse::<Rational>().unwrap()).to_string();
        b.kernel_row("1", joint, &[("1", stay[i]), ("2", &leave)])
            .expect("known joint");
    }
    b.build()
}

/// Build the insurance game and its initial profit goal (2, 3).
///
/// Probabilities are exact: staying in the boom has probability 11/20,
/// 3/5, 9/20 and 3/5 under the four joint actions, so the one-step slump
/// probability is at least 2/5 everywhere.
pub fn build_insurance_model() -> (GameModel, GoalVector) {
    let stage0 = stage([["1", "1"], ["0", "0"], ["0", "1"], ["1", "1"]]);
    let tail = stage([["1", "0"], ["1", "1"], ["0", "0"], ["0", "0"]]);
    let model = GameModel::new(2, ["2".to_string()], vec![stage0], tail);
    let goal = canonicalize_goal(&["2".parse().unwrap(), "3".parse().unwrap()]);
    (model, goal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{compute_beta, validate_model};

    fn rat(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn validates_cleanly_with_known_beta() {
        let (model, goal) = build_insurance_model();
        let report = validate_model(&model);
        assert!(report.ok);
        assert!(report.findings.is_empty());
        assert_eq!(compute_beta(&model), rat("2/5"));
        assert_eq!(goal.to_string(), "2,3");
    }

    #[test]
    fn reward_tables_match_the_instance() {
        let (model, _) = build_insurance_model();
        let s0 = model.stage(0);
        let si = s0.state_index("1").unwrap();
        // Stage 0, (a11, b11): both players earn 1.
        assert_eq!(s0.rewards(si, 0).unwrap(), &[rat("1"), rat("1")]);
        // Tail, (a11, b11): player 1 earns 1, player 2 earns 0.
        let tail = model.stage(5);
        assert_eq!(tail.rewards(si, 0).unwrap(), &[rat("1"), rat("0")]);
        // Tail, (a11, b12): both earn.
        assert_eq!(tail.rewards(si, 1).unwrap(), &[rat("1"), rat("1")]);
    }

    #[test]
    fn kernel_rows_are_exact() {
        let (model, _) = build_insurance_model();
        let tail = model.tail();
        let si = tail.state_index("1").unwrap();
        // (a12, b11) has joint index 2.
        let row = tail.kernel_row(si, 2).unwrap();
        assert_eq!(row.len(), 2);
        assert_eq!(row[0], ("1".to_string(), rat("9/20")));
        assert_eq!(row[1], ("2".to_string(), rat("11/20")));
    }
}
