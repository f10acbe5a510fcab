//! Candidate generation.
//!
//! Certification is the only source of correctness, so candidate order is a
//! free choice. Two generators are provided: exhaustive/seeded-random grid
//! enumeration (every cell's weights drawn from the grid, exact sum 1) and
//! best-response dynamics (greedy pure responses, certified each round, with
//! seeded random-grid restarts on cycles). Both return the first passing
//! certificate, or the best-gap certificate marked failed when the budget
//! runs out.

use std::collections::BTreeMap;
use std::collections::HashSet;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bellman::MixedAction;
use crate::error::{Error, Result};
use crate::goal::GoalVector;
use crate::model::GameModel;
use crate::par;
use crate::policy::{MarkovMultipolicy, PolicyStage};
use crate::rational::Rational;
use crate::solver::certify::{Certificate, CertifyContext, Provenance};
use crate::solver::compositions::{composition_count, sample_composition, unrank_composition};

/// Candidate ordering for the grid search.
#[derive(Clone, Copy, Debug)]
pub enum CandidateOrder {
    /// Lexicographic over cells, then over compositions within a cell.
    Deterministic,
    /// Independent uniform draws from the grid, derived from the seed.
    SeededRandom(u64),
}

/// Search result: either a passing certificate or an exhaustion report
/// carrying the best (smallest max-gap) failed certificate. Both carry the
/// multipolicy the certificate describes.
#[derive(Clone, Debug)]
pub enum SolveOutcome {
    Certified {
        certificate: Box<Certificate>,
        policy: MarkovMultipolicy,
    },
    Exhausted {
        best: Box<Certificate>,
        best_policy: MarkovMultipolicy,
        tried: u64,
        gap_history: Vec<f64>,
    },
}

impl SolveOutcome {
    pub fn certificate(&self) -> &Certificate {
        match self {
            SolveOutcome::Certified { certificate, .. } => certificate,
            SolveOutcome::Exhausted { best, .. } => best,
        }
    }

    pub fn policy(&self) -> &MarkovMultipolicy {
        match self {
            SolveOutcome::Certified { policy, .. } => policy,
            SolveOutcome::Exhausted { best_policy, .. } => best_policy,
        }
    }

    pub fn passed(&self) -> bool {
        matches!(self, SolveOutcome::Certified { .. })
    }
}

/// One policy cell in candidate-encoding order.
struct CellRef {
    stage: usize,
    state: String,
    goal: GoalVector,
    player: usize,
    action_count: usize,
    compositions: BigUint,
}

fn candidate_cells(ctx: &CertifyContext, grid_k: u64) -> Vec<CellRef> {
    let mut cells = Vec::new();
    for n in 0..ctx.horizon() {
        let stage = ctx.model.stage(n);
        for (si, state) in stage.states().iter().enumerate() {
            if ctx.model.is_target(state) {
                continue;
            }
            for goal in ctx.lattice.stage(n).goals() {
                for player in 0..ctx.model.num_players() {
                    let action_count = stage.actions(si, player).len();
                    cells.push(CellRef {
                        stage: n,
                        state: state.clone(),
                        goal: goal.clone(),
                        player,
                        action_count,
                        compositions: composition_count(grid_k, action_count),
                    });
                }
            }
        }
    }
    cells
}

fn weights_from_counts(counts: &[u64], grid_k: u64) -> Result<MixedAction> {
    let k = Rational::from(grid_k);
    let weights = counts
        .iter()
        .map(|&c| &Rational::from(c) / &k)
        .collect();
    MixedAction::new(weights)
}

fn policy_from_cells(
    ctx: &CertifyContext,
    cells: &[CellRef],
    mut draw: impl FnMut(&CellRef) -> Result<MixedAction>,
) -> Result<MarkovMultipolicy> {
    let mut stages: Vec<PolicyStage> = (0..ctx.horizon()).map(|_| PolicyStage::default()).collect();
    for cell in cells {
        let mixed = draw(cell)?;
        let key = (cell.state.clone(), cell.goal.clone());
        let profile = stages[cell.stage]
            .cells
            .entry(key)
            .or_insert_with(Vec::new);
        if profile.is_empty() {
            profile.resize(ctx.model.num_players(), MixedAction::uniform(1));
        }
        profile[cell.player] = mixed;
    }
    Ok(MarkovMultipolicy::new(ctx.model.num_players(), stages))
}

/// The grid candidate at `index` in lexicographic order (last cell varies
/// fastest).
fn deterministic_candidate(
    ctx: &CertifyContext,
    cells: &[CellRef],
    grid_k: u64,
    index: u64,
) -> Result<MarkovMultipolicy> {
    let mut digits: BTreeMap<usize, BigUint> = BTreeMap::new();
    let mut rem = BigUint::from(index);
    for (pos, cell) in cells.iter().enumerate().rev() {
        if rem.to_u64() == Some(0) {
            break;
        }
        let (q, r) = rem.div_rem(&cell.compositions);
        digits.insert(pos, r);
        rem = q;
    }
    if rem.to_u64() != Some(0) {
        return Err(Error::InvalidParameter(format!(
            "candidate index {index} exceeds the grid"
        )));
    }
    let mut pos = 0usize;
    policy_from_cells(ctx, cells, |cell| {
        let zero = BigUint::from(0u32);
        let digit = digits.get(&pos).unwrap_or(&zero).clone();
        pos += 1;
        let counts = unrank_composition(&digit, grid_k, cell.action_count)?;
        weights_from_counts(&counts, grid_k)
    })
}

/// The grid candidate drawn from stream `index` of the seeded generator.
fn random_candidate(
    ctx: &CertifyContext,
    cells: &[CellRef],
    grid_k: u64,
    seed: u64,
    index: u64,
) -> Result<MarkovMultipolicy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    policy_from_cells(ctx, cells, |cell| {
        let counts = sample_composition(&mut rng, grid_k, cell.action_count);
        weights_from_counts(&counts, grid_k)
    })
}

/// Iterate grid-valued candidates in the chosen order, certifying each, and
/// return the first pass. Candidates are certified in parallel batches;
/// within a batch the lowest index wins.
pub fn solve_grid(
    model: &GameModel,
    initial_goals: &[GoalVector],
    epsilon: &Rational,
    budget: u64,
    order: CandidateOrder,
) -> Result<SolveOutcome> {
    if budget == 0 {
        return Err(Error::InvalidParameter("budget must be >= 1".into()));
    }
    let ctx = CertifyContext::new(model, initial_goals, epsilon)?;
    let cells = candidate_cells(&ctx, ctx.params.grid_k);
    let grid_k = ctx.params.grid_k;
    let total: Option<u64> = match order {
        CandidateOrder::Deterministic => cells
            .iter()
            .fold(Some(BigUint::from(1u32)), |acc, c| {
                acc.map(|a| a * &c.compositions)
            })
            .and_then(|t| t.to_u64()),
        CandidateOrder::SeededRandom(_) => None,
    };
    let limit = match total {
        Some(t) => budget.min(t),
        None => budget,
    };

    let strategy = match order {
        CandidateOrder::Deterministic => "grid",
        CandidateOrder::SeededRandom(_) => "grid-random",
    };
    let seed = match order {
        CandidateOrder::SeededRandom(s) => Some(s),
        CandidateOrder::Deterministic => None,
    };

    let mut best: Option<(Certificate, MarkovMultipolicy)> = None;
    let mut history = Vec::new();
    let batch = 64u64;
    let mut start = 0u64;
    while start < limit {
        let end = (start + batch).min(limit);
        let results = par::try_map_indexed((end - start) as usize, |off| {
            let index = start + off as u64;
            let candidate = match order {
                CandidateOrder::Deterministic => {
                    deterministic_candidate(&ctx, &cells, grid_k, index)?
                }
                CandidateOrder::SeededRandom(s) => {
                    random_candidate(&ctx, &cells, grid_k, s, index)?
                }
            };
            let cert = ctx.certify(
                &candidate,
                Provenance {
                    strategy: strategy.into(),
                    candidate_index: index,
                    candidates_tried: index + 1,
                    seed,
                },
            )?;
            Ok((cert, candidate))
        })?;
        for (cert, candidate) in results {
            history.push(cert.max_gap);
            if cert.pass {
                return Ok(SolveOutcome::Certified {
                    certificate: Box::new(cert),
                    policy: candidate,
                });
            }
            if best.as_ref().map_or(true, |(b, _)| cert.max_gap < b.max_gap) {
                best = Some((cert, candidate));
            }
        }
        start = end;
    }
    let (mut best, best_policy) = best.expect("at least one candidate was certified");
    best.provenance.candidates_tried = limit;
    Ok(SolveOutcome::Exhausted {
        best: Box::new(best),
        best_policy,
        tried: limit,
        gap_history: history,
    })
}

/// Best-response dynamics: start from the uniform multipolicy, replace each
/// player's policy in turn by the greedy pure response to the others, and
/// certify after every round. Revisiting a candidate means the dynamics
/// cycled; with a seed the search restarts from a random grid candidate,
/// without one it stops. No convergence is claimed — a pass is sound because
/// the certificate is.
pub fn solve_best_response_dynamics(
    model: &GameModel,
    initial_goals: &[GoalVector],
    epsilon: &Rational,
    max_rounds: u64,
    seed: Option<u64>,
) -> Result<SolveOutcome> {
    if max_rounds == 0 {
        return Err(Error::InvalidParameter("max_rounds must be >= 1".into()));
    }
    let ctx = CertifyContext::new(model, initial_goals, epsilon)?;
    let cells = candidate_cells(&ctx, ctx.params.grid_k);
    let horizon = ctx.horizon();
    let mut policy = MarkovMultipolicy::uniform(model, &ctx.lattice, horizon);
    let mut seen: HashSet<u64> = HashSet::new();
    let mut best: Option<(Certificate, MarkovMultipolicy)> = None;
    let mut history = Vec::new();
    let mut restarts = 0u64;

    for round in 0..max_rounds {
        let cert = ctx.certify(
            &policy,
            Provenance {
                strategy: "brd".into(),
                candidate_index: round,
                candidates_tried: round + 1,
                seed,
            },
        )?;
        history.push(cert.max_gap);
        if cert.pass {
            return Ok(SolveOutcome::Certified {
                certificate: Box::new(cert),
                policy,
            });
        }
        if best.as_ref().map_or(true, |(b, _)| cert.max_gap < b.max_gap) {
            best = Some((cert, policy.clone()));
        }
        seen.insert(policy.fingerprint());

        // One round of sequential greedy replies.
        for player in 0..model.num_players() {
            let br = crate::eval::evaluate_best_response_with_beta(
                model,
                &policy,
                &ctx.lattice,
                player,
                horizon,
                &ctx.params.beta,
            )?;
            for (n, stage_argmax) in br.argmax.iter().enumerate() {
                let stage = model.stage(n);
                for (state, goal, _) in iter_cells(stage_argmax) {
                    let list = stage_argmax.get(state, goal).expect("argmax cell");
                    let si = stage.state_index(state).expect("known state");
                    let count = stage.actions(si, player).len();
                    policy.set_player_action(
                        n,
                        state,
                        goal,
                        player,
                        MixedAction::point(count, list[0]),
                    )?;
                }
            }
        }

        if seen.contains(&policy.fingerprint()) {
            match seed {
                Some(s) => {
                    restarts += 1;
                    policy = random_candidate(&ctx, &cells, ctx.params.grid_k, s, restarts)?;
                }
                None => break,
            }
        }
    }

    let (mut best, best_policy) = best.expect("at least one round was certified");
    best.provenance.candidates_tried = history.len() as u64;
    Ok(SolveOutcome::Exhausted {
        best: Box::new(best),
        best_policy,
        tried: history.len() as u64,
        gap_history: history,
    })
}

fn iter_cells(
    stage: &crate::eval::ArgmaxStage,
) -> impl Iterator<Item = (&str, &GoalVector, ())> + '_ {
    stage.states.iter().flat_map(move |s| {
        stage
            .goals
            .iter()
            .map(move |g| (s.as_str(), g, ()))
    })
}
