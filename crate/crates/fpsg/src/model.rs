//! The nonstationary game model and its validation.
//!
//! A model is a finite prefix of per-stage data plus one tail stage that
//! repeats forever, which is enough to describe any finitely-specified
//! instance (and covers the bundled scenarios, which are stationary from
//! stage 1 on). Stage `n` uses `prefix[n]` for `n < prefix_len` and the tail
//! otherwise.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// One transition row: pairs of (next-state name, probability).
pub type KernelRow = Vec<(String, Rational)>;

/// Per-state data: one action list per player, plus rewards and transitions
/// indexed by joint action. Rewards and kernel rows may be absent for states
/// in the target set (the process stops there, so they are never read).
#[derive(Clone, Debug)]
pub struct StateCell {
    pub actions: Vec<Vec<String>>,
    pub rewards: Vec<Option<Vec<Rational>>>,
    pub kernel: Vec<Option<KernelRow>>,
}

/// The model data for one stage: states, per-state action sets, rewards and
/// the transition kernel into the next stage.
#[derive(Clone, Debug)]
pub struct StageModel {
    states: Vec<String>,
    state_index: HashMap<String, usize>,
    cells: Vec<StateCell>,
}

impl StageModel {
    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_index.get(name).copied()
    }

    pub fn cell(&self, state: usize) -> &StateCell {
        &self.cells[state]
    }

    /// Action names for `player` in `state`.
    pub fn actions(&self, state: usize, player: usize) -> &[String] {
        &self.cells[state].actions[player]
    }

    pub fn action_counts(&self, state: usize) -> Vec<usize> {
        self.cells[state].actions.iter().map(Vec::len).collect()
    }

    /// Number of joint actions in `state`.
    pub fn joint_count(&self, state: usize) -> usize {
        self.cells[state].actions.iter().map(Vec::len).product()
    }

    /// Mixed-radix index of a joint action (player 0 most significant).
    pub fn joint_index(&self, state: usize, joint: &[usize]) -> usize {
        let mut idx = 0;
        for (player, &a) in joint.iter().enumerate() {
            idx = idx * self.cells[state].actions[player].len() + a;
        }
        idx
    }

    /// All joint actions of `state` in index order.
    pub fn joints(&self, state: usize) -> impl Iterator<Item = Vec<usize>> + '_ {
        let counts = self.action_counts(state);
        JointIter::new(counts)
    }

    pub fn joint_label(&self, state: usize, joint: &[usize]) -> String {
        joint
            .iter()
            .enumerate()
            .map(|(p, &a)| self.cells[state].actions[p][a].clone())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn rewards(&self, state: usize, joint_index: usize) -> Result<&[Rational]> {
        self.cells[state].rewards[joint_index]
            .as_deref()
            .ok_or_else(|| Error::IncompleteDynamics {
                state: self.states[state].clone(),
                joint: joint_index.to_string(),
            })
    }

    pub fn kernel_row(&self, state: usize, joint_index: usize) -> Result<&KernelRow> {
        self.cells[state].kernel[joint_index]
            .as_ref()
            .ok_or_else(|| Error::IncompleteDynamics {
                state: self.states[state].clone(),
                joint: joint_index.to_string(),
            })
    }
}

/// Row-major iterator over joint action indices.
struct JointIter {
    counts: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl JointIter {
    fn new(counts: Vec<usize>) -> Self {
        let start = if counts.iter().any(|&c| c == 0) {
            None
        } else {
            Some(vec![0; counts.len()])
        };
        Self { counts, next: start }
    }
}

impl Iterator for JointIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.clone()?;
        // Advance the odometer, last player fastest.
        let mut bump = self.next.take().unwrap();
        let mut pos = bump.len();
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            bump[pos] += 1;
            if bump[pos] < self.counts[pos] {
                self.next = Some(bump);
                break;
            }
            bump[pos] = 0;
        }
        Some(current)
    }
}

/// Builder for one stage; resolves action names to indices and fills the
/// dense joint-indexed tables.
pub struct StageBuilder {
    num_players: usize,
    stage: StageModel,
}

impl StageBuilder {
    pub fn new<S: Into<String>>(states: impl IntoIterator<Item = S>, num_players: usize) -> Self {
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        let state_index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let cells = states
            .iter()
            .map(|_| StateCell {
                actions: vec![Vec::new(); num_players],
                rewards: Vec::new(),
                kernel: Vec::new(),
            })
            .collect();
        Self {
            num_players,
            stage: StageModel {
                states,
                state_index,
                cells,
            },
        }
    }

    fn state(&self, name: &str) -> Result<usize> {
        self.stage.state_index(name).ok_or_else(|| Error::UnknownState {
            stage: usize::MAX,
            state: name.to_string(),
        })
    }

    /// Set every player's action list for `state` and size the dynamics
    /// tables accordingly.
    pub fn actions<S: Into<String>>(
        &mut self,
        state: &str,
        lists: impl IntoIterator<Item = Vec<S>>,
    ) -> Result<&mut Self> {
        let si = self.state(state)?;
        let lists: Vec<Vec<String>> = lists
            .into_iter()
            .map(|l| l.into_iter().map(Into::into).collect())
            .collect();
        if lists.len() != self.num_players {
            return Err(Error::InvalidParameter(format!(
                "state '{state}': expected {} action lists, got {}",
                self.num_players,
                lists.len()
            )));
        }
        self.stage.cells[si].actions = lists;
        let joints = self.stage.joint_count(si);
        self.stage.cells[si].rewards = vec![None; joints];
        self.stage.cells[si].kernel = vec![None; joints];
        Ok(self)
    }

    fn resolve_joint(&self, si: usize, joint_names: &[&str]) -> Result<usize> {
        let mut joint = Vec::with_capacity(joint_names.len());
        for (player, name) in joint_names.iter().enumerate() {
            let pos = self.stage.cells[si].actions[player]
                .iter()
                .position(|a| a == name)
                .ok_or_else(|| Error::UnknownAction {
                    stage: usize::MAX,
                    state: self.stage.states[si].clone(),
                    player,
                    action: name.to_string(),
                })?;
            joint.push(pos);
        }
        Ok(self.stage.joint_index(si, &joint))
    }

    pub fn reward(&mut self, state: &str, joint: &[&str], values: &[&str]) -> Result<&mut Self> {
        let si = self.state(state)?;
        let ji = self.resolve_joint(si, joint)?;
        let parsed: Result<Vec<Rational>> = values.iter().map(|v| v.parse()).collect();
        self.stage.cells[si].rewards[ji] = Some(parsed?);
        Ok(self)
    }

    pub fn reward_values(
        &mut self,
        state: &str,
        joint: &[usize],
        values: Vec<Rational>,
    ) -> Result<&mut Self> {
        let si = self.state(state)?;
        let ji = self.stage.joint_index(si, joint);
        self.stage.cells[si].rewards[ji] = Some(values);
        Ok(self)
    }

    pub fn kernel_row(
        &mut self,
        state: &str,
        joint: &[&str],
        row: &[(&str, &str)],
    ) -> Result<&mut Self> {
        let si = self.state(state)?;
        let ji = self.resolve_joint(si, joint)?;
        let parsed: Result<KernelRow> = row
            .iter()
            .map(|(next, p)| Ok((next.to_string(), p.parse::<Rational>()?)))
            .collect();
        self.stage.cells[si].kernel[ji] = Some(parsed?);
        Ok(self)
    }

    /// Set a reward vector addressing the joint action by names.
    pub fn reward_parsed(
        &mut self,
        state: &str,
        joint: &[&str],
        values: Vec<Rational>,
    ) -> Result<&mut Self> {
        let si = self.state(state)?;
        let ji = self.resolve_joint(si, joint)?;
        self.stage.cells[si].rewards[ji] = Some(values);
        Ok(self)
    }

    /// Set a kernel row addressing the joint action by names.
    pub fn kernel_row_parsed(
        &mut self,
        state: &str,
        joint: &[&str],
        row: KernelRow,
    ) -> Result<&mut Self> {
        let si = self.state(state)?;
        let ji = self.resolve_joint(si, joint)?;
        self.stage.cells[si].kernel[ji] = Some(row);
        Ok(self)
    }

    pub fn kernel_row_values(
        &mut self,
        state: &str,
        joint: &[usize],
        row: KernelRow,
    ) -> Result<&mut Self> {
        let si = self.state(state)?;
        let ji = self.stage.joint_index(si, joint);
        self.stage.cells[si].kernel[ji] = Some(row);
        Ok(self)
    }

    pub fn build(self) -> StageModel {
        self.stage
    }
}

/// The full game: number of players, target set, stage prefix and repeating
/// tail.
#[derive(Clone, Debug)]
pub struct GameModel {
    num_players: usize,
    target_set: BTreeSet<String>,
    prefix: Vec<StageModel>,
    tail: StageModel,
}

impl GameModel {
    pub fn new(
        num_players: usize,
        target_set: impl IntoIterator<Item = String>,
        prefix: Vec<StageModel>,
        tail: StageModel,
    ) -> Self {
        Self {
            num_players,
            target_set: target_set.into_iter().collect(),
            prefix,
            tail,
        }
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn target_set(&self) -> &BTreeSet<String> {
        &self.target_set
    }

    pub fn is_target(&self, state: &str) -> bool {
        self.target_set.contains(state)
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix.len()
    }

    /// The stage model governing decisions at time `n`.
    pub fn stage(&self, n: usize) -> &StageModel {
        if n < self.prefix.len() {
            &self.prefix[n]
        } else {
            &self.tail
        }
    }

    pub fn tail(&self) -> &StageModel {
        &self.tail
    }

    pub fn prefix(&self) -> &[StageModel] {
        &self.prefix
    }

    /// Indices of the distinct represented stages: the prefix stages and the
    /// tail (reported as index `prefix_len`).
    pub fn represented_stages(&self) -> impl Iterator<Item = usize> {
        0..=self.prefix.len()
    }

    /// Exact one-step probability of entering the target set from
    /// (`stage n`, state, joint action).
    pub fn target_mass(&self, n: usize, state: usize, joint_index: usize) -> Result<Rational> {
        let row = self.stage(n).kernel_row(state, joint_index)?;
        let mut mass = Rational::zero();
        for (next, p) in row {
            if self.is_target(next) {
                mass += p;
            }
        }
        Ok(mass)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub location: String,
    pub message: String,
}

/// Verdict of a series-divergence check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Divergence {
    /// The series provably diverges (positive repeating tail term).
    DivergesProven,
    /// The series provably converges, so the sufficient condition fails.
    FailsProven,
    /// Nothing provable from the probed terms.
    Inconclusive,
}

impl std::fmt::Display for Divergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Divergence::DivergesProven => write!(f, "diverges (proven)"),
            Divergence::FailsProven => write!(f, "fails (proven)"),
            Divergence::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BetaSequence {
    /// Per-stage minimum absorption probabilities for the prefix stages,
    /// followed by the tail value.
    pub prefix: Vec<Rational>,
    pub tail: Rational,
    pub verdict: Divergence,
}

/// Everything `validate_model` learns about a model.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub ok: bool,
    pub findings: Vec<Finding>,
    pub beta: Option<Rational>,
    pub beta_sequence: Option<BetaSequence>,
}

fn stage_label(model: &GameModel, n: usize) -> String {
    if n < model.prefix_len() {
        format!("stage {n}")
    } else {
        "tail".to_string()
    }
}

/// Check every model invariant, collecting findings instead of failing on
/// the first problem. `ok` is true iff no finding has severity `Error`.
pub fn validate_model(model: &GameModel) -> ValidationReport {
    let mut findings = Vec::new();
    let err = |location: String, message: String, findings: &mut Vec<Finding>| {
        findings.push(Finding {
            severity: Severity::Error,
            location,
            message,
        });
    };

    if model.num_players() == 0 {
        err("model".into(), "num_players must be >= 1".into(), &mut findings);
    }
    if model.target_set().is_empty() {
        err("model".into(), "target set is empty".into(), &mut findings);
    }

    for n in model.represented_stages() {
        let stage = model.stage(n);
        let label = stage_label(model, n);
        let mut seen = BTreeSet::new();
        for s in stage.states() {
            if !seen.insert(s) {
                err(label.clone(), format!("duplicate state '{s}'"), &mut findings);
            }
        }
        for d in model.target_set() {
            if stage.state_index(d).is_none() {
                err(
                    label.clone(),
                    format!("target state '{d}' missing from state set"),
                    &mut findings,
                );
            }
        }
        // The tail feeds into itself; prefix stage n feeds into stage n+1.
        let next_stage = model.stage(n + 1);
        for (si, name) in stage.states().iter().enumerate() {
            let loc = format!("{label}, state '{name}'");
            let cell = stage.cell(si);
            if cell.actions.len() != model.num_players() {
                err(
                    loc.clone(),
                    format!(
                        "expected {} action lists, found {}",
                        model.num_players(),
                        cell.actions.len()
                    ),
                    &mut findings,
                );
                continue;
            }
            for (player, list) in cell.actions.iter().enumerate() {
                if list.is_empty() {
                    err(loc.clone(), format!("empty action list for player {player}"), &mut findings);
                }
                let mut names = BTreeSet::new();
                for a in list {
                    if !names.insert(a) {
                        err(loc.clone(), format!("duplicate action '{a}' for player {player}"), &mut findings);
                    }
                }
            }
            let in_target = model.is_target(name);
            for ji in 0..stage.joint_count(si) {
                let jloc = || format!("{loc}, action ({})", joint_label_safe(stage, si, ji));
                match cell.rewards.get(ji).and_then(|r| r.as_ref()) {
                    None if !in_target => {
                        err(jloc(), "missing reward vector".into(), &mut findings);
                    }
                    Some(r) => {
                        if r.len() != model.num_players() {
                            err(jloc(), format!("reward vector has {} entries", r.len()), &mut findings);
                        }
                        for (player, v) in r.iter().enumerate() {
                            if v.is_negative() {
                                err(jloc(), format!("negative reward {v} for player {player}"), &mut findings);
                            }
                        }
                    }
                    None => {}
                }
                match cell.kernel.get(ji).and_then(|k| k.as_ref()) {
                    None if !in_target => {
                        err(jloc(), "missing kernel row".into(), &mut findings);
                    }
                    Some(row) => {
                        let mut total = Rational::zero();
                        for (next, p) in row {
                            if p.is_negative() {
                                err(jloc(), format!("negative probability {p} to '{next}'"), &mut findings);
                            }
                            total += p;
                            if next_stage.state_index(next).is_none() {
                                err(
                                    jloc(),
                                    format!("next state '{next}' not in successor stage"),
                                    &mut findings,
                                );
                            }
                        }
                        if total != Rational::one() {
                            err(jloc(), format!("kernel row not stochastic (sums to {total})"), &mut findings);
                        }
                    }
                    None => {}
                }
            }
        }
    }

    let ok = findings.iter().all(|f| f.severity != Severity::Error);
    let (beta, beta_sequence) = if ok {
        let seq = beta_sequence(model);
        (Some(compute_beta(model)), Some(seq))
    } else {
        (None, None)
    };
    ValidationReport {
        ok,
        findings,
        beta,
        beta_sequence,
    }
}

fn joint_label_safe(stage: &StageModel, si: usize, ji: usize) -> String {
    let counts = stage.action_counts(si);
    let mut rem = ji;
    let mut names = vec![String::new(); counts.len()];
    for p in (0..counts.len()).rev() {
        if counts[p] == 0 {
            return format!("#{ji}");
        }
        let a = rem % counts[p];
        rem /= counts[p];
        names[p] = stage.cell(si).actions[p][a].clone();
    }
    names.join(" ")
}

/// Minimum one-step absorption probability at one stage, over non-target
/// states and all joint actions. Returns 1 when the stage has no such rows.
fn stage_beta(model: &GameModel, n: usize) -> Rational {
    let stage = model.stage(n);
    let mut best: Option<Rational> = None;
    for (si, name) in stage.states().iter().enumerate() {
        if model.is_target(name) {
            continue;
        }
        for ji in 0..stage.joint_count(si) {
            if let Ok(mass) = model.target_mass(n, si, ji) {
                best = Some(match best.take() {
                    Some(b) => b.min(mass),
                    None => mass,
                });
            }
        }
    }
    best.unwrap_or_else(Rational::one)
}

/// The uniform one-step absorption lower bound: the minimum of
/// `p_n(D | i, a)` over every represented stage, non-target state and joint
/// action. For an eventually-stationary model this finite minimum equals the
/// infimum over all times. Zero means certification is impossible.
pub fn compute_beta(model: &GameModel) -> Rational {
    model
        .represented_stages()
        .map(|n| stage_beta(model, n))
        .reduce(Rational::min)
        .unwrap_or_else(Rational::one)
}

fn beta_sequence(model: &GameModel) -> BetaSequence {
    let prefix: Vec<Rational> = (0..model.prefix_len()).map(|n| stage_beta(model, n)).collect();
    let tail = stage_beta(model, model.prefix_len());
    let verdict = if tail.is_positive() {
        Divergence::DivergesProven
    } else {
        Divergence::FailsProven
    };
    BetaSequence {
        prefix,
        tail,
        verdict,
    }
}

/// Probe the per-stage absorption bounds `beta_n` for `n < probe_horizon`
/// and decide whether their series diverges. The tail repeats forever, so a
/// positive tail bound proves divergence and a zero tail bound proves the
/// series converges.
pub fn check_divergence(model: &GameModel, probe_horizon: usize) -> (Divergence, Rational) {
    let mut partial = Rational::zero();
    for n in 0..probe_horizon {
        partial += &stage_beta(model, n);
    }
    let tail = stage_beta(model, model.prefix_len());
    let verdict = if tail.is_positive() {
        Divergence::DivergesProven
    } else {
        Divergence::FailsProven
    };
    (verdict, partial)
}
