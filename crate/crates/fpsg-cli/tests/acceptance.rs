//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `--nocapture`). Tolerances and thresholds
//! are pinned in the asserts.

mod common;

use std::process::Command;
use std::time::Instant;

use common::{random_mixed, random_policy, random_small_model, rat};
use fpsg::goal::build_goal_lattice;
use fpsg::model::{compute_beta, validate_model};
use fpsg::policy::MarkovMultipolicy;
use fpsg::scenarios::energy::{build_energy_model, condition_beta, random_params, ActionCaps, EnergyTail};
use fpsg::scenarios::insurance::build_insurance_model;
use fpsg::solver::{grid_params, snap_to_grid, solve_best_response_dynamics, solve_grid, CandidateOrder};
use fpsg::{
    enumerate_oracle, evaluate_best_response, evaluate_policy, truncation_bound,
    truncation_bound_exact, GoalVector, Rational,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pass(name: &str) {
    println!("ACCEPTANCE {name}: PASS");
}

fn exact(x: f64) -> Rational {
    Rational::from_f64_exact(x).expect("finite value")
}

/// The small-instance suite: the bundled insurance game plus seeded random
/// instances (at most 3 states, at most 2 actions per player).
fn small_suite() -> Vec<(fpsg::GameModel, Vec<GoalVector>)> {
    let mut suite = Vec::new();
    let (ins, goal) = build_insurance_model();
    suite.push((ins, vec![goal]));
    for seed in 0..10 {
        suite.push(random_small_model(seed));
    }
    suite
}

#[test]
fn table1_reproduction() {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_fpsg"))
        .args(["table1", "--beta", "2/5"])
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    let got = String::from_utf8(out.stdout).unwrap();
    let expected = "epsilon,period_length\n\
        0.1,10\n0.2,9\n0.3,8\n0.4,7\n0.5,7\n0.6,6\n0.7,6\n0.8,6\n0.9,6\n1.0,5\n";
    assert_eq!(got, expected, "period-length table must match exactly");
    assert!(start.elapsed().as_secs_f64() < 1.0, "must finish within 1s");
    pass("table1-reproduction");
}

#[test]
fn geometric_oracle() {
    let start = Instant::now();
    let (model, _) = build_insurance_model();
    let m = 10;
    let bound = truncation_bound(&rat("2/5"), 10).unwrap();
    assert!((bound - 0.01511654).abs() < 1e-7);

    for (goal, target) in [("2", 0.55), ("3", 0.3025)] {
        let g = fpsg::canonicalize_goal(&[rat(goal), rat("3")]);
        let lattice = build_goal_lattice(&model, &[g.clone()], m);
        let policy = MarkovMultipolicy::pure_from(&model, &lattice, m, |_, _, _| vec![0, 0]);
        let table = evaluate_policy(&model, &policy, &lattice, 0, m).unwrap();
        let v = table.value_at("1", &g).unwrap();
        assert!(
            (v - target).abs() <= bound,
            "goal {goal}: value {v} not within {bound} of {target}"
        );
    }
    assert!(start.elapsed().as_secs_f64() < 1.0, "must finish within 1s");
    pass("geometric-oracle");
}

#[test]
fn enumeration_sandwich() {
    let start = Instant::now();
    let mut cells_checked = 0usize;
    for (idx, (model, goals)) in small_suite().into_iter().enumerate() {
        assert!(validate_model(&model).ok, "suite model {idx} invalid");
        // Pick the horizon (at most 6) so the exact enumeration stays under
        // a fixed node budget.
        let branching = worst_branching(&model);
        let mut horizon = 6usize;
        while horizon > 1 && (branching as f64).powi(horizon as i32) > 150_000.0 {
            horizon -= 1;
        }
        let lattice = build_goal_lattice(&model, &goals, horizon);
        let beta = compute_beta(&model);
        let bound = truncation_bound_exact(&beta, horizon as u32).unwrap();
        for pseed in [1u64, 2] {
            let policy = random_policy(&model, &lattice, horizon, 1000 + pseed);
            for player in 0..model.num_players() {
                let table = evaluate_policy(&model, &policy, &lattice, player, horizon).unwrap();
                let s0 = model.stage(0);
                for state in s0.states() {
                    if model.is_target(state) {
                        continue;
                    }
                    for goal in lattice.stage(0).goals() {
                        let u = exact(table.value_at(state, goal).unwrap());
                        let (lower, upper) = enumerate_oracle(
                            &model, &policy, state, goal, player, horizon, 2_000_000,
                        )
                        .unwrap();
                        assert!(
                            lower <= &u + &bound,
                            "model {idx} ({state},{goal},{player}): lower {lower} > u+bound"
                        );
                        assert!(
                            u <= &upper + &bound,
                            "model {idx} ({state},{goal},{player}): u {u} > upper+bound"
                        );
                        cells_checked += 1;
                    }
                }
            }
        }
    }
    assert!(cells_checked >= 20, "suite too small: {cells_checked} cells");
    assert!(start.elapsed().as_secs_f64() < 30.0, "must finish within 30s");
    pass("enumeration-sandwich");
}

fn worst_branching(model: &fpsg::GameModel) -> usize {
    let mut worst = 1;
    for n in model.represented_stages() {
        let stage = model.stage(n);
        for (si, name) in stage.states().iter().enumerate() {
            if model.is_target(name) {
                continue;
            }
            let joints = stage.joint_count(si);
            let succ = (0..joints)
                .map(|ji| stage.kernel_row(si, ji).map(|r| r.len()).unwrap_or(1))
                .max()
                .unwrap_or(1);
            worst = worst.max(joints * succ);
        }
    }
    worst
}

#[test]
fn monotone_iteration() {
    for seed in 0..50u64 {
        let (model, goals) = random_small_model(seed);
        let lattice = build_goal_lattice(&model, &goals, 8);
        let policy = random_policy(&model, &lattice, 8, 7000 + seed);
        for player in 0..model.num_players() {
            let s0 = model.stage(0);
            let mut last: Vec<f64> = Vec::new();
            for m in 1..=8 {
                let table = evaluate_policy(&model, &policy, &lattice, player, m).unwrap();
                let mut now = Vec::new();
                for state in s0.states() {
                    if model.is_target(state) {
                        continue;
                    }
                    for goal in lattice.stage(0).goals() {
                        now.push(table.value_at(state, goal).unwrap());
                    }
                }
                if !last.is_empty() {
                    for (a, b) in last.iter().zip(&now) {
                        assert!(
                            b + 1e-12 >= *a,
                            "seed {seed} player {player} m {m}: {b} < {a}"
                        );
                    }
                }
                last = now;
            }
        }
    }
    pass("monotone-iteration");
}

#[test]
fn best_response_dominance() {
    let m = 6;
    for seed in 0..50u64 {
        let (model, goals) = random_small_model(seed);
        let lattice = build_goal_lattice(&model, &goals, m);
        let base = random_policy(&model, &lattice, m, 9000 + seed);
        for player in 0..model.num_players() {
            let br = evaluate_best_response(&model, &base, &lattice, player, m).unwrap();
            for deviation in 0..20u64 {
                let mut candidate = base.clone();
                let mut rng = ChaCha8Rng::seed_from_u64(seed * 100 + deviation);
                for n in 0..m {
                    let stage = model.stage(n);
                    for (si, state) in stage.states().iter().enumerate() {
                        if model.is_target(state) {
                            continue;
                        }
                        for goal in lattice.stage(n).goals() {
                            let count = stage.actions(si, player).len();
                            candidate
                                .set_player_action(n, state, goal, player, random_mixed(&mut rng, count))
                                .unwrap();
                        }
                    }
                }
                let u = evaluate_policy(&model, &candidate, &lattice, player, m).unwrap();
                for n in 0..=m {
                    for (state, goal, uv) in u.stage(n).iter() {
                        let bv = br.table.stage(n).get(state, goal).unwrap();
                        assert!(
                            bv + 1e-9 >= uv,
                            "seed {seed} player {player} dev {deviation} stage {n} ({state},{goal}): {bv} < {uv}"
                        );
                    }
                }
            }
        }
    }
    pass("best-response-dominance");
}

#[test]
fn certificate_soundness() {
    let epsilon = rat("1/2");
    let mut passing = 0usize;
    for (idx, (model, goals)) in small_suite().into_iter().enumerate() {
        let beta = compute_beta(&model);
        if !beta.is_positive() {
            continue;
        }
        let outcome =
            solve_best_response_dynamics(&model, &goals, &epsilon, 12, Some(3)).unwrap();
        if !outcome.passed() {
            continue;
        }
        passing += 1;
        let cert = outcome.certificate();
        let policy = outcome.policy();
        let deep = cert.horizon + 20;
        let lattice = build_goal_lattice(&model, &goals, deep);
        let slack = &epsilon
            + &(&rat("2") * &truncation_bound_exact(&beta, deep as u32).unwrap());
        for player in 0..model.num_players() {
            let u = evaluate_policy(&model, policy, &lattice, player, deep).unwrap();
            let v = evaluate_best_response(&model, policy, &lattice, player, deep).unwrap();
            for state in model.stage(0).states() {
                if model.is_target(state) {
                    continue;
                }
                for goal in lattice.stage(0).goals() {
                    let uv = exact(u.value_at(state, goal).unwrap());
                    let vv = exact(v.table.value_at(state, goal).unwrap());
                    assert!(
                        &vv - &uv <= slack,
                        "model {idx} player {player} ({state},{goal}): gap beyond epsilon + 2*bound"
                    );
                }
            }
        }
    }
    assert!(passing >= 3, "too few passing certificates: {passing}");
    pass("certificate-soundness");
}

#[test]
fn insurance_solve() {
    let start = Instant::now();
    let (model, goal) = build_insurance_model();
    let goals = vec![goal];
    let epsilon = rat("1/2");
    let outcome = solve_best_response_dynamics(&model, &goals, &epsilon, 100_000, Some(11))
        .unwrap();
    let outcome = if outcome.passed() {
        outcome
    } else {
        solve_grid(&model, &goals, &epsilon, 100_000, CandidateOrder::SeededRandom(11)).unwrap()
    };
    assert!(outcome.passed(), "no passing certificate within budget");
    let cert = outcome.certificate();
    assert!(exact(cert.max_gap) < &(&epsilon * &rat("3")) / &rat("5"));
    assert!(
        start.elapsed().as_secs_f64() < 300.0,
        "must finish within 5 minutes"
    );
    pass("insurance-solve");
}

#[test]
fn grid_density() {
    let (model, _) = build_insurance_model();
    let params = grid_params(&rat("1/10"), &model, 10).unwrap();
    assert_eq!(params.grid_k, 8001);
    let delta = params.delta();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..1000 {
        let parts = 2 + (trial % 3);
        let mixed = random_mixed(&mut rng, parts);
        let snapped = snap_to_grid(mixed.weights(), params.grid_k).unwrap();
        let total: Rational = snapped.iter().cloned().sum();
        assert_eq!(total, Rational::one(), "trial {trial}: weights must sum to 1");
        for (s, w) in snapped.iter().zip(mixed.weights()) {
            assert!(
                (s - w).abs() < delta,
                "trial {trial}: max-norm distance reached {}",
                (s - w).abs()
            );
        }
    }
    pass("grid-density");
}

#[test]
fn energy_normalization() {
    for seed in 0..100u64 {
        let params = random_params(seed);
        let model = build_energy_model(&params, ActionCaps::default()).unwrap();
        let beta_n = match &params.tail {
            EnergyTail::Stationary(s) => condition_beta(s),
            _ => unreachable!("random params are stationary"),
        };
        let stage = model.tail();
        for (si, name) in stage.states().iter().enumerate() {
            if model.is_target(name) {
                continue;
            }
            for ji in 0..stage.joint_count(si) {
                let row = stage.kernel_row(si, ji).unwrap();
                let total: Rational = row.iter().map(|(_, p)| p.clone()).sum();
                assert_eq!(total, Rational::one(), "seed {seed} state {name}");
                let mass = model.target_mass(0, si, ji).unwrap();
                assert!(
                    mass >= beta_n,
                    "seed {seed} state {name}: absorption {mass} below bound {beta_n}"
                );
            }
        }
    }
    pass("energy-normalization");
}
