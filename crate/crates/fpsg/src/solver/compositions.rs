//! Stars-and-bars machinery for the weight grid.
//!
//! A grid mixed action over `parts` actions assigns each action a weight
//! `c_i / k` with nonnegative integers `c_i` summing to `k` — a composition
//! of `k` into `parts` parts. Compositions are ranked lexicographically so
//! candidates can be enumerated by index without materializing the grid.

use num_bigint::BigUint;
use num_integer::binomial;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Number of compositions of `k` into `parts` nonnegative parts:
/// `C(k + parts - 1, parts - 1)`.
pub fn composition_count(k: u64, parts: usize) -> BigUint {
    if parts == 0 {
        return if k == 0 { BigUint::one() } else { BigUint::zero() };
    }
    binomial(
        BigUint::from(k + parts as u64 - 1),
        BigUint::from(parts as u64 - 1),
    )
}

/// The composition of `k` into `parts` parts at lexicographic `index`
/// (first part most significant, ascending).
pub fn unrank_composition(index: &BigUint, k: u64, parts: usize) -> Result<Vec<u64>> {
    if parts == 0 {
        return Err(Error::InvalidParameter("composition with zero parts".into()));
    }
    if index >= &composition_count(k, parts) {
        return Err(Error::InvalidParameter(format!(
            "composition index {index} out of range"
        )));
    }
    let mut out = Vec::with_capacity(parts);
    let mut rem_index = index.clone();
    let mut rem_sum = k;
    for slot in 0..parts - 1 {
        let remaining_parts = parts - slot - 1;
        let mut first = 0u64;
        loop {
            let block = composition_count(rem_sum - first, remaining_parts);
            if rem_index < block {
                break;
            }
            rem_index -= block;
            first += 1;
        }
        out.push(first);
        rem_sum -= first;
    }
    out.push(rem_sum);
    Ok(out)
}

/// A uniformly random composition of `k` into `parts` parts, drawn by
/// sampling bar positions among `k + parts - 1` slots.
pub fn sample_composition<R: Rng>(rng: &mut R, k: u64, parts: usize) -> Vec<u64> {
    if parts == 1 {
        return vec![k];
    }
    let slots = (k + parts as u64 - 1) as usize;
    let mut bars: Vec<usize> = rand::seq::index::sample(rng, slots, parts - 1).into_vec();
    bars.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev: i64 = -1;
    for &b in &bars {
        out.push((b as i64 - prev - 1) as u64);
        prev = b as i64;
    }
    out.push((slots as i64 - prev - 1) as u64);
    out
}

/// Round exact weights (summing to 1) to the nearest grid point `c/k` with
/// the counts still summing to `k`, by largest remainder. The max-norm
/// distance to the input is strictly below `1/k`.
pub fn snap_to_grid(weights: &[Rational], k: u64) -> Result<Vec<Rational>> {
    let total: Rational = weights.iter().cloned().sum();
    if total != Rational::one() {
        return Err(Error::InvalidParameter(format!(
            "weights sum to {total}, not 1"
        )));
    }
    let k_rat = Rational::from(k);
    let mut counts: Vec<BigUint> = Vec::with_capacity(weights.len());
    let mut fracs: Vec<Rational> = Vec::with_capacity(weights.len());
    let mut assigned = BigUint::zero();
    for w in weights {
        let scaled = w * &k_rat;
        let floor = scaled.floor_bigint();
        let floor_u = floor
            .to_biguint()
            .ok_or_else(|| Error::InvalidParameter("negative weight".into()))?;
        fracs.push(&scaled - &Rational::from(floor_u.clone()));
        assigned += &floor_u;
        counts.push(floor_u);
    }
    let mut leftover = (BigUint::from(k) - assigned)
        .to_usize()
        .expect("leftover below parts count");
    // Hand the leftover units to the largest fractional parts; entries with
    // zero fraction never need one.
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| fracs[b].cmp(&fracs[a]).then(a.cmp(&b)));
    for &i in &order {
        if leftover == 0 {
            break;
        }
        if fracs[i].is_zero() {
            break;
        }
        counts[i] += 1u32;
        leftover -= 1;
    }
    Ok(counts
        .into_iter()
        .map(|c| &Rational::from(c) / &k_rat)
        .collect())
}
