//! Shared generators for the integration and acceptance suites: seeded
//! random small game instances and random policies over their lattices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fpsg::bellman::MixedAction;
use fpsg::goal::{canonicalize_goal, GoalLattice, GoalVector};
use fpsg::model::{GameModel, StageBuilder, StageModel};
use fpsg::policy::MarkovMultipolicy;
use fpsg::Rational;

pub fn rat(s: &str) -> Rational {
    s.parse().unwrap()
}

/// A random stage over `decision_states` plus the target state "d", with at
/// most `max_actions` actions per player. Every kernel row keeps at least
/// one part in five on the target so absorption bounds stay positive.
fn random_stage(
    rng: &mut ChaCha8Rng,
    players: usize,
    decision_states: usize,
    max_actions: usize,
) -> StageModel {
    let mut names: Vec<String> = (0..decision_states).map(|i| format!("s{i}")).collect();
    names.push("d".into());
    let mut b = StageBuilder::new(names.clone(), players);
    let halt = vec!["halt".to_string()];
    b.actions("d", vec![halt; players]).unwrap();
    for si in 0..decision_states {
        let state = format!("s{si}");
        let lists: Vec<Vec<String>> = (0..players)
            .map(|p| {
                let count = rng.gen_range(1..=max_actions);
                (0..count).map(|a| format!("p{p}a{a}")).collect()
            })
            .collect();
        b.actions(&state, lists.clone()).unwrap();

        let counts: Vec<usize> = lists.iter().map(Vec::len).collect();
        let mut joint = vec![0usize; players];
        loop {
            let joint_names: Vec<String> = joint
                .iter()
                .enumerate()
                .map(|(p, &a)| lists[p][a].clone())
                .collect();
            let joint_refs: Vec<&str> = joint_names.iter().map(String::as_str).collect();

            // Rewards: small rationals with denominator 1 or 2.
            let rewards: Vec<String> = (0..players)
                .map(|_| {
                    let num = rng.gen_range(0..=2);
                    let den = rng.gen_range(1..=2);
                    format!("{num}/{den}")
                })
                .collect();
            let reward_refs: Vec<&str> = rewards.iter().map(String::as_str).collect();
            b.reward(&state, &joint_refs, &reward_refs).unwrap();

            // Kernel: integer weights over (s0.., d) with d >= 1.
            let mut weights: Vec<u32> = (0..decision_states).map(|_| rng.gen_range(0..=3)).collect();
            weights.push(rng.gen_range(1..=4));
            let total: u32 = weights.iter().sum();
            let mut row: Vec<(&str, String)> = Vec::new();
            for (i, w) in weights.iter().enumerate() {
                if *w == 0 {
                    continue;
                }
                let target: &str = if i < decision_states { &names[i] } else { "d" };
                row.push((target, format!("{w}/{total}")));
            }
            let row_refs: Vec<(&str, &str)> = row.iter().map(|(s, p)| (*s, p.as_str())).collect();
            b.kernel_row(&state, &joint_refs, &row_refs).unwrap();

            // Next joint action.
            let mut pos = players;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                joint[pos] += 1;
                if joint[pos] < counts[pos] {
                    break;
                }
                joint[pos] = 0;
            }
            if joint.iter().all(|&a| a == 0) {
                break;
            }
        }
    }
    b.build()
}

/// A seeded random small instance: 1 or 2 players, 1 or 2 decision states,
/// at most 2 actions per player, an optional one-stage prefix, and a
/// positive absorption bound by construction.
pub fn random_small_model(seed: u64) -> (GameModel, Vec<GoalVector>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let players = rng.gen_range(1..=2);
    let decision_states = rng.gen_range(1..=2);
    let max_actions = 2;
    let tail = random_stage(&mut rng, players, decision_states, max_actions);
    // The prefix must declare the same state set so the target stays inside
    // every stage.
    let prefix = if rng.gen_bool(0.5) {
        vec![random_stage(&mut rng, players, decision_states, max_actions)]
    } else {
        Vec::new()
    };
    let model = GameModel::new(players, ["d".to_string()], prefix, tail);
    let goal_parts: Vec<Rational> = (0..players)
        .map(|_| match rng.gen_range(0..3) {
            0 => rat("1"),
            1 => rat("3/2"),
            _ => rat("2"),
        })
        .collect();
    let goals = vec![canonicalize_goal(&goal_parts)];
    (model, goals)
}

/// A random multipolicy on every lattice cell: exact rational weights from
/// small integer draws.
pub fn random_policy(
    model: &GameModel,
    lattice: &GoalLattice,
    horizon: usize,
    seed: u64,
) -> MarkovMultipolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = MarkovMultipolicy::uniform(model, lattice, horizon);
    for n in 0..horizon {
        let stage = model.stage(n);
        for (si, state) in stage.states().iter().enumerate() {
            if model.is_target(state) {
                continue;
            }
            for goal in lattice.stage(n).goals() {
                for player in 0..model.num_players() {
                    let count = stage.actions(si, player).len();
                    let mixed = random_mixed(&mut rng, count);
                    policy
                        .set_player_action(n, state, goal, player, mixed)
                        .unwrap();
                }
            }
        }
    }
    policy
}

pub fn random_mixed(rng: &mut ChaCha8Rng, count: usize) -> MixedAction {
    loop {
        let weights: Vec<u32> = (0..count).map(|_| rng.gen_range(0..=4)).collect();
        let total: u32 = weights.iter().sum();
        if total == 0 {
            continue;
        }
        let rats: Vec<Rational> = weights
            .iter()
            .map(|&w| Rational::new(w as i64, total as i64).unwrap())
            .collect();
        return MixedAction::new(rats).unwrap();
    }
}
