//! Certification parameters: the period length and the weight grid.
//!
//! Both are computed in exact rational arithmetic. The accuracy parameter is
//! itself a rational (parse `"0.1"` as 1/10, not as the nearest float), so
//! borderline floor expressions come out exactly.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::eval::truncation_bound_exact;
use crate::model::{compute_beta, GameModel};
use crate::rational::Rational;

/// Everything the grid search and certificates need to know about the
/// discretization for one accuracy level.
#[derive(Clone, Debug)]
pub struct SolverParams {
    pub epsilon: Rational,
    pub beta: Rational,
    /// Period length: sweeps run this many stages.
    pub horizon: usize,
    /// Grid resolution: weights take values in {0, 1/k, ..., k/k}.
    pub grid_k: u64,
}

impl SolverParams {
    pub fn delta(&self) -> Rational {
        &Rational::one() / &Rational::from(self.grid_k)
    }

    /// The grid weight `index / k`.
    pub fn grid_weight(&self, index: u64) -> Rational {
        &Rational::from(index) / &Rational::from(self.grid_k)
    }
}

/// The period length: one more than the positive part of
/// `log_{1-beta}(epsilon * beta / 5)`, i.e. the smallest horizon whose
/// truncation bound drops below `epsilon / 5`.
pub fn horizon_for(epsilon: &Rational, beta: &Rational) -> Result<usize> {
    if !epsilon.is_positive() {
        return Err(Error::InvalidParameter("epsilon must be > 0".into()));
    }
    if !beta.is_positive() || beta > &Rational::one() {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in (0, 1], got {beta}"
        )));
    }
    if beta == &Rational::one() {
        return Ok(1);
    }
    let target = &(epsilon * beta) / &Rational::from_int(5);
    if target >= Rational::one() {
        return Ok(1);
    }
    let base = Rational::one() - beta.clone();
    // Largest t with (1 - beta)^t >= target; the log floor for a base < 1.
    let mut t: usize = 0;
    let mut power = Rational::one();
    loop {
        let next = &power * &base;
        if next < target {
            break;
        }
        power = next;
        t += 1;
        if t > 1_000_000 {
            return Err(Error::InvalidParameter(
                "period length exceeds 1e6 stages".into(),
            ));
        }
    }
    Ok(t + 1)
}

/// Largest per-state action count for `player` over stages `0..=horizon`,
/// non-target states only.
fn max_action_count(model: &GameModel, player: usize, horizon: usize) -> u64 {
    let mut best = 1u64;
    for n in 0..=horizon.min(model.prefix_len()) {
        let stage = model.stage(n);
        for (si, name) in stage.states().iter().enumerate() {
            if model.is_target(name) {
                continue;
            }
            best = best.max(stage.actions(si, player).len() as u64);
        }
    }
    best
}

/// Grid parameters for one accuracy level: `k` is one more than the floor of
/// `10 * horizon * players * prod_k(max action count) / epsilon`.
pub fn grid_params(epsilon: &Rational, model: &GameModel, horizon: usize) -> Result<SolverParams> {
    if !epsilon.is_positive() {
        return Err(Error::InvalidParameter("epsilon must be > 0".into()));
    }
    let mut action_prod: u64 = 1;
    for player in 0..model.num_players() {
        action_prod = action_prod
            .checked_mul(max_action_count(model, player, horizon))
            .ok_or_else(|| Error::InvalidParameter("action product overflows u64".into()))?;
    }
    let numerator = 10u64
        .checked_mul(horizon as u64)
        .and_then(|x| x.checked_mul(model.num_players() as u64))
        .and_then(|x| x.checked_mul(action_prod))
        .ok_or_else(|| Error::InvalidParameter("grid numerator overflows u64".into()))?;
    let ratio = &Rational::from(numerator) / epsilon;
    let k = ratio
        .floor_bigint()
        .to_u64()
        .and_then(|f| f.checked_add(1))
        .ok_or_else(|| Error::InvalidParameter("grid resolution overflows u64".into()))?;
    Ok(SolverParams {
        epsilon: epsilon.clone(),
        beta: compute_beta(model),
        horizon,
        grid_k: k,
    })
}

/// The worst-case number of grid candidates that exhaustive enumeration may
/// need before a certifiable one appears. Astronomically large in general;
/// reported with its digit count.
#[derive(Clone, Debug)]
pub struct EnumerationBound {
    pub value: BigUint,
    pub digits: usize,
    pub horizon: usize,
    pub grid_k: u64,
}

pub fn enumeration_bound(epsilon: &Rational, model: &GameModel) -> Result<EnumerationBound> {
    let beta = compute_beta(model);
    let horizon = horizon_for(epsilon, &beta)?;
    let params = grid_params(epsilon, model, horizon)?;
    let base = BigUint::from(params.grid_k + 1);
    let mut value = BigUint::one();
    for n in 0..=horizon {
        let stage = model.stage(n);
        let mut cell_prod: u64 = 1;
        for (si, name) in stage.states().iter().enumerate() {
            if model.is_target(name) {
                continue;
            }
            let size: u64 = stage
                .action_counts(si)
                .iter()
                .map(|&c| c as u64)
                .product();
            cell_prod = cell_prod.max(size);
        }
        let exp = u32::try_from(cell_prod)
            .map_err(|_| Error::InvalidParameter("joint action count overflows u32".into()))?;
        value *= base.pow(exp);
    }
    let digits = value.to_string().len();
    Ok(EnumerationBound {
        value,
        digits,
        horizon,
        grid_k: params.grid_k,
    })
}

/// Check that the chosen period length really beats `epsilon / 5`.
pub fn horizon_bound_is_tight(epsilon: &Rational, beta: &Rational) -> Result<bool> {
    let horizon = horizon_for(epsilon, beta)?;
    let bound = truncation_bound_exact(beta, horizon as u32)?;
    Ok(&bound * &Rational::from_int(5) < *epsilon)
}
