//! The three-player energy management game.
//!
//! Player 1 owns renewable generation plus storage and can sell energy to
//! players 2 and 3, who can also buy from the utility. Storage levels are
//! the state; the game ends when every store is empty. Transitions factor
//! into one marginal per player, each driven by that player's net demand:
//! player 1 by its own consumed-minus-harvested energy, players 2 and 3 by
//! consumption minus utility purchases.
//!
//! Consumption distributions with unbounded support are represented
//! truncated, with the residual tail mass assigned to the truncation atom:
//! piling the tail onto the largest demand only helps emptying the stores,
//! so the absorption bounds computed here remain valid lower bounds.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Divergence, GameModel, StageBuilder};
use crate::rational::Rational;

/// An exact finite probability mass function on the integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pmf {
    atoms: BTreeMap<i64, Rational>,
}

impl Pmf {
    /// Atoms must be nonnegative and sum exactly to one; zero-mass atoms are
    /// dropped.
    pub fn new(atoms: impl IntoIterator<Item = (i64, Rational)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut total = Rational::zero();
        for (v, p) in atoms {
            if p.is_negative() {
                return Err(Error::InvalidParameter(format!(
                    "negative probability {p} at {v}"
                )));
            }
            if p.is_zero() {
                continue;
            }
            total += &p;
            let slot = map.entry(v).or_insert_with(Rational::zero);
            *slot += &p;
        }
        if total != Rational::one() {
            return Err(Error::InvalidParameter(format!(
                "distribution sums to {total}, not 1"
            )));
        }
        Ok(Self { atoms: map })
    }

    pub fn point(v: i64) -> Self {
        let mut atoms = BTreeMap::new();
        atoms.insert(v, Rational::one());
        Self { atoms }
    }

    pub fn uniform(lo: i64, hi: i64) -> Self {
        let n = (hi - lo + 1) as i64;
        let w = Rational::new(1, n).expect("nonempty range");
        Self {
            atoms: (lo..=hi).map(|v| (v, w.clone())).collect(),
        }
    }

    /// Geometric with ratio `r`, truncated at `cutoff` with the residual
    /// tail mass `r^cutoff` on the cutoff atom.
    pub fn truncated_geometric(ratio: &Rational, cutoff: u32) -> Result<Self> {
        if !ratio.is_positive() || ratio >= &Rational::one() {
            return Err(Error::InvalidParameter("ratio must lie in (0,1)".into()));
        }
        let mut atoms = BTreeMap::new();
        let keep = Rational::one() - ratio.clone();
        for m in 0..cutoff {
            atoms.insert(m as i64, &keep * &ratio.pow(m));
        }
        atoms.insert(cutoff as i64, ratio.pow(cutoff));
        Pmf::new(atoms)
    }

    pub fn mass(&self, at: i64) -> Rational {
        self.atoms.get(&at).cloned().unwrap_or_else(Rational::zero)
    }

    /// Total mass at or above `from`.
    pub fn tail_mass(&self, from: i64) -> Rational {
        self.atoms
            .range(from..)
            .map(|(_, p)| p.clone())
            .sum()
    }

    pub fn min_support(&self) -> i64 {
        *self.atoms.keys().next().expect("nonempty pmf")
    }

    pub fn max_support(&self) -> i64 {
        *self.atoms.keys().next_back().expect("nonempty pmf")
    }

    pub fn atoms(&self) -> impl Iterator<Item = (i64, &Rational)> {
        self.atoms.iter().map(|(&v, p)| (v, p))
    }
}

/// Distributions and capacities for one stage.
#[derive(Clone, Debug)]
pub struct EnergyStageParams {
    /// Maximum storage per player.
    pub capacities: [u32; 3],
    /// Player 1's consumed-minus-harvested energy, on {-M1, ..., M1}.
    pub net_demand: Pmf,
    /// Consumption of players 2 and 3, on {0, 1, ...} (truncated).
    pub consumption: [Pmf; 2],
    /// Utility purchases of players 2 and 3, on {0, ..., Mk}.
    pub purchase: [Pmf; 2],
}

impl EnergyStageParams {
    fn validate(&self) -> Result<()> {
        let m1 = self.capacities[0] as i64;
        if self.net_demand.min_support() < -m1 || self.net_demand.max_support() > m1 {
            return Err(Error::InvalidParameter(
                "net demand support exceeds player 1 capacity".into(),
            ));
        }
        for (k, pmf) in self.consumption.iter().enumerate() {
            if pmf.min_support() < 0 {
                return Err(Error::InvalidParameter(format!(
                    "player {} consumption has negative support",
                    k + 2
                )));
            }
        }
        for (k, pmf) in self.purchase.iter().enumerate() {
            let cap = self.capacities[k + 1] as i64;
            if pmf.min_support() < 0 || pmf.max_support() > cap {
                return Err(Error::InvalidParameter(format!(
                    "player {} purchases exceed capacity",
                    k + 2
                )));
            }
        }
        Ok(())
    }
}

/// Tail behaviour of the stage parameters.
#[derive(Clone, Debug)]
pub enum EnergyTail {
    /// One parameter set repeats forever; the model is buildable.
    Stationary(EnergyStageParams),
    /// Declared analytic family: the top-demand atom satisfies
    /// `q_n(M1) >= delta / (n + M1)` for all tail stages while the other
    /// distributions stay fixed. Supports the divergence check only.
    HarmonicDemand {
        delta: Rational,
        rest: EnergyStageParams,
    },
}

#[derive(Clone, Debug)]
pub struct EnergyParams {
    pub prefix: Vec<EnergyStageParams>,
    pub tail: EnergyTail,
}

impl EnergyParams {
    pub fn stationary(stage: EnergyStageParams) -> Self {
        Self {
            prefix: Vec::new(),
            tail: EnergyTail::Stationary(stage),
        }
    }

    fn stage(&self, n: usize) -> &EnergyStageParams {
        if n < self.prefix.len() {
            &self.prefix[n]
        } else {
            match &self.tail {
                EnergyTail::Stationary(s) => s,
                EnergyTail::HarmonicDemand { rest, .. } => rest,
            }
        }
    }

    fn validate(&self) -> Result<()> {
        for p in &self.prefix {
            p.validate()?;
        }
        match &self.tail {
            EnergyTail::Stationary(s) => s.validate(),
            EnergyTail::HarmonicDemand { delta, rest } => {
                if !delta.is_positive() || delta >= &Rational::one() {
                    return Err(Error::InvalidParameter(
                        "harmonic family constant must lie in (0,1)".into(),
                    ));
                }
                rest.validate()
            }
        }
    }
}

/// Optional caps on trade volumes, shrinking the action sets.
#[derive(Clone, Copy, Debug, Default)]
pub struct ActionCaps {
    pub sell: Option<u32>,
    pub buy: Option<u32>,
}

/// Everything a reward rule may depend on for one (state, joint action).
#[derive(Clone, Debug)]
pub struct EnergyOutcome {
    pub stage: usize,
    pub storage: [u32; 3],
    /// Player 1's offers to players 2 and 3.
    pub offers: (u32, u32),
    /// Demands of players 2 and 3 towards player 1.
    pub demands: (u32, u32),
    /// Actually traded volumes: componentwise minima of offer and demand.
    pub trades: (u32, u32),
}

/// Default demo rewards: one unit per unit of energy traded (seller earns
/// the total volume, each buyer earns its own).
pub fn unit_trade_rewards(o: &EnergyOutcome) -> [Rational; 3] {
    [
        Rational::from((o.trades.0 + o.trades.1) as u64),
        Rational::from(o.trades.0 as u64),
        Rational::from(o.trades.1 as u64),
    ]
}

/// Difference distribution of consumption minus purchases, following the
/// piecewise convolution split at zero.
pub fn convolve_demand(q: &Pmf, g: &Pmf, cap: u32) -> Pmf {
    let mut atoms = BTreeMap::new();
    let lo = -(cap as i64);
    let hi = q.max_support();
    for m in lo..=hi {
        let mut total = Rational::zero();
        if m >= 0 {
            for l in 0..=cap as i64 {
                total += &(&q.mass(m + l) * &g.mass(l));
            }
        } else {
            for l in (-m)..=cap as i64 {
                total += &(&q.mass(l + m) * &g.mass(l));
            }
        }
        if !total.is_zero() {
            atoms.insert(m, total);
        }
    }
    Pmf::new(atoms).expect("difference of two distributions is a distribution")
}

fn state_name(s: &[u32; 3]) -> String {
    format!("{},{},{}", s[0], s[1], s[2])
}

fn clip(x: i64, cap: u32) -> u32 {
    x.max(0).min(cap as i64) as u32
}

/// The absorption lower bound of one stage's parameters: probability that
/// player 1 draws its top demand while both consumers' net demand reaches
/// their capacity.
pub fn condition_beta(p: &EnergyStageParams) -> Rational {
    let hq2 = convolve_demand(&p.consumption[0], &p.purchase[0], p.capacities[1]);
    let hq3 = convolve_demand(&p.consumption[1], &p.purchase[1], p.capacities[2]);
    let q_top = p.net_demand.mass(p.capacities[0] as i64);
    &(&q_top * &hq2.tail_mass(p.capacities[1] as i64)) * &hq3.tail_mass(p.capacities[2] as i64)
}

/// Report of the Condition-C style divergence check.
#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub verdict: Divergence,
    pub partial_sum: Rational,
    pub betas: Vec<Rational>,
}

/// Probe the per-stage absorption bounds and decide whether their series
/// diverges. Stationary tails decide it directly; a declared harmonic
/// demand family proves divergence when both consumers keep positive
/// capacity-tail mass. Anything else is inconclusive.
pub fn check_condition_c(params: &EnergyParams, probe: usize) -> Result<ConditionReport> {
    params.validate()?;
    let mut betas = Vec::with_capacity(probe);
    let mut partial = Rational::zero();
    for n in 0..probe {
        let beta_n = match (&params.tail, n < params.prefix.len()) {
            (_, true) => condition_beta(&params.prefix[n]),
            (EnergyTail::Stationary(s), false) => condition_beta(s),
            (EnergyTail::HarmonicDemand { delta, rest }, false) => {
                let m1 = rest.capacities[0] as i64;
                let hq2 = convolve_demand(&rest.consumption[0], &rest.purchase[0], rest.capacities[1]);
                let hq3 = convolve_demand(&rest.consumption[1], &rest.purchase[1], rest.capacities[2]);
                let harmonic = &delta.clone() / &Rational::from_int(n as i64 + m1);
                &(&harmonic * &hq2.tail_mass(rest.capacities[1] as i64))
                    * &hq3.tail_mass(rest.capacities[2] as i64)
            }
        };
        partial += &beta_n;
        betas.push(beta_n);
    }
    let verdict = match &params.tail {
        EnergyTail::Stationary(s) => {
            if condition_beta(s).is_positive() {
                Divergence::DivergesProven
            } else {
                Divergence::Inconclusive
            }
        }
        EnergyTail::HarmonicDemand { delta, rest } => {
            let hq2 = convolve_demand(&rest.consumption[0], &rest.purchase[0], rest.capacities[1]);
            let hq3 = convolve_demand(&rest.consumption[1], &rest.purchase[1], rest.capacities[2]);
            let tails_positive = hq2.tail_mass(rest.capacities[1] as i64).is_positive()
                && hq3.tail_mass(rest.capacities[2] as i64).is_positive();
            if delta.is_positive() && tails_positive {
                // The top-demand atoms alone form a divergent harmonic
                // series and the consumer factors have a positive infimum.
                Divergence::DivergesProven
            } else {
                Divergence::Inconclusive
            }
        }
    };
    Ok(ConditionReport {
        verdict,
        partial_sum: partial,
        betas,
    })
}

/// Build the energy game with the default unit-per-trade rewards.
pub fn build_energy_model(params: &EnergyParams, caps: ActionCaps) -> Result<GameModel> {
    build_energy_model_with(params, caps, unit_trade_rewards)
}

/// Build the energy game with caller-supplied rewards. The target set is the
/// all-empty storage state.
pub fn build_energy_model_with(
    params: &EnergyParams,
    caps: ActionCaps,
    rewards: impl Fn(&EnergyOutcome) -> [Rational; 3],
) -> Result<GameModel> {
    params.validate()?;
    let tail_params = match &params.tail {
        EnergyTail::Stationary(s) => s,
        EnergyTail::HarmonicDemand { .. } => {
            return Err(Error::InvalidParameter(
                "a declared demand family is not buildable; supply a stationary tail".into(),
            ))
        }
    };
    let mut prefix = Vec::with_capacity(params.prefix.len());
    for n in 0..params.prefix.len() {
        prefix.push(build_stage(params.stage(n), params.stage(n + 1), n, caps, &rewards)?);
    }
    let tail = build_stage(tail_params, tail_params, params.prefix.len(), caps, &rewards)?;
    Ok(GameModel::new(3, ["0,0,0".to_string()], prefix, tail))
}

fn offers_for(i1: u32, cap: Option<u32>) -> Vec<(u32, u32)> {
    let lim = cap.unwrap_or(u32::MAX);
    let mut out = Vec::new();
    for b1 in 0..=i1.min(lim) {
        for b2 in 0..=(i1 - b1).min(lim) {
            out.push((b1, b2));
        }
    }
    out
}

fn demands_for(room: u32, cap: Option<u32>) -> Vec<u32> {
    (0..=room.min(cap.unwrap_or(u32::MAX))).collect()
}

fn build_stage(
    cur: &EnergyStageParams,
    next: &EnergyStageParams,
    stage_index: usize,
    caps: ActionCaps,
    rewards: &impl Fn(&EnergyOutcome) -> [Rational; 3],
) -> Result<crate::model::StageModel> {
    let [m1, m2, m3] = cur.capacities;
    let hq2 = convolve_demand(&cur.consumption[0], &cur.purchase[0], m2);
    let hq3 = convolve_demand(&cur.consumption[1], &cur.purchase[1], m3);

    let mut states = Vec::new();
    for i1 in 0..=m1 {
        for i2 in 0..=m2 {
            for i3 in 0..=m3 {
                states.push(state_name(&[i1, i2, i3]));
            }
        }
    }
    let mut b = StageBuilder::new(states.clone(), 3);
    for i1 in 0..=m1 {
        for i2 in 0..=m2 {
            for i3 in 0..=m3 {
                let storage = [i1, i2, i3];
                let name = state_name(&storage);
                let offers = offers_for(i1, caps.sell);
                let d2 = demands_for(m2 - i2, caps.buy);
                let d3 = demands_for(m3 - i3, caps.buy);
                let offer_names: Vec<String> =
                    offers.iter().map(|(x, y)| format!("s{x}_{y}")).collect();
                let d2_names: Vec<String> = d2.iter().map(|a| format!("d{a}")).collect();
                let d3_names: Vec<String> = d3.iter().map(|a| format!("d{a}")).collect();
                b.actions(&name, vec![offer_names, d2_names, d3_names])?;

                if storage == [0, 0, 0] {
                    continue;
                }
                for (ai1, &(b1, b2)) in offers.iter().enumerate() {
                    for (ai2, &a2) in d2.iter().enumerate() {
                        for (ai3, &a3) in d3.iter().enumerate() {
                            let t2 = b1.min(a2);
                            let t3 = b2.min(a3);
                            let joint = [ai1, ai2, ai3];
                            let outcome = EnergyOutcome {
                                stage: stage_index,
                                storage,
                                offers: (b1, b2),
                                demands: (a2, a3),
                                trades: (t2, t3),
                            };
                            let r = rewards(&outcome);
                            for v in &r {
                                if v.is_negative() {
                                    return Err(Error::InvalidParameter(
                                        "reward rule produced a negative reward".into(),
                                    ));
                                }
                            }
                            b.reward_values(&name, &joint, r.to_vec())?;

                            let marg1 = seller_marginal(&cur.net_demand, i1, t2, t3, next.capacities[0]);
                            let marg2 = consumer_marginal(&hq2, i2, t2, next.capacities[1]);
                            let marg3 = consumer_marginal(&hq3, i3, t3, next.capacities[2]);
                            let mut row = Vec::new();
                            for (j1, p1) in &marg1 {
                                for (j2, p2) in &marg2 {
                                    let p12 = p1 * p2;
                                    for (j3, p3) in &marg3 {
                                        row.push((state_name(&[*j1, *j2, *j3]), &p12 * p3));
                                    }
                                }
                            }
                            b.kernel_row_values(&name, &joint, row)?;
                        }
                    }
                }
            }
        }
    }
    Ok(b.build())
}

/// Player 1's next-storage distribution after netting the trades and the
/// demand draw.
fn seller_marginal(q1: &Pmf, i1: u32, t2: u32, t3: u32, cap_next: u32) -> Vec<(u32, Rational)> {
    let mut marg: BTreeMap<u32, Rational> = BTreeMap::new();
    for (m, p) in q1.atoms() {
        let j = clip(i1 as i64 - t2 as i64 - t3 as i64 - m, cap_next);
        *marg.entry(j).or_insert_with(Rational::zero) += p;
    }
    marg.into_iter().collect()
}

/// A buyer's next-storage distribution after receiving the trade and
/// drawing net consumption.
fn consumer_marginal(hq: &Pmf, ik: u32, tk: u32, cap_next: u32) -> Vec<(u32, Rational)> {
    let mut marg: BTreeMap<u32, Rational> = BTreeMap::new();
    for (m, p) in hq.atoms() {
        let j = clip(ik as i64 + tk as i64 - m, cap_next);
        *marg.entry(j).or_insert_with(Rational::zero) += p;
    }
    marg.into_iter().collect()
}

/// Seeded random stationary parameters on small capacities, for tests and
/// the acceptance suite.
pub fn random_params(seed: u64) -> EnergyParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let caps = [
        rng.gen_range(1..=2u32),
        rng.gen_range(1..=2u32),
        rng.gen_range(1..=2u32),
    ];
    let demand = random_pmf(&mut rng, -(caps[0] as i64), caps[0] as i64);
    let consumption = [
        random_pmf(&mut rng, 0, 3),
        random_pmf(&mut rng, 0, 3),
    ];
    let purchase = [
        random_pmf(&mut rng, 0, caps[1] as i64),
        random_pmf(&mut rng, 0, caps[2] as i64),
    ];
    let stage = EnergyStageParams {
        capacities: caps,
        net_demand: demand,
        consumption,
        purchase,
    };
    EnergyParams::stationary(stage)
}

fn random_pmf(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Pmf {
    loop {
        let weights: Vec<u32> = (lo..=hi).map(|_| rng.gen_range(0..5)).collect();
        let total: u32 = weights.iter().sum();
        if total == 0 {
            continue;
        }
        let atoms = (lo..=hi)
            .zip(&weights)
            .map(|(v, &w)| (v, Rational::new(w as i64, total as i64).unwrap()))
            .collect::<Vec<_>>();
        return Pmf::new(atoms).expect("weights normalize");
    }
}
