//! Exhaustive search for the optimal k-subset.

use itertools::Itertools;

use crate::catalog::{ExposureMatrix, SlotId};
use crate::error::{Error, Result};

/// Largest number of subsets [`brute_force_opt`] will enumerate.
pub const ORACLE_LIMIT: u128 = 1_000_000;

/// `C(n, k)`, saturating once it passes `cap`.
pub fn binomial_capped(n: usize, k: usize, cap: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (n as u128 - i) / (i + 1);
        if acc > cap {
            return cap + 1;
        }
    }
    acc
}

/// Enumerates every `k`-subset of `ground` in lexicographic order and returns
/// the first one attaining the maximum influence. `k` larger than the ground
/// set is clamped.
pub fn brute_force_opt(
    exposure: &ExposureMatrix,
    ground: &[SlotId],
    k: usize,
) -> Result<(Vec<SlotId>, f64)> {
    let mut ground = ground.to_vec();
    ground.sort_unstable();
    ground.dedup();
    for &s in &ground {
        exposure.check(s)?;
    }
    let k = k.min(ground.len());
    let combinations = binomial_capped(ground.len(), k, ORACLE_LIMIT);
    if combinations > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            combinations,
            limit: ORACLE_LIMIT,
        });
    }

    let mut residual = vec![1.0f64; exposure.num_users()];
    let mut touched: Vec<u32> = Vec::new();
    let mut best: Option<(Vec<SlotId>, f64)> = None;
    for subset in ground.iter().copied().combinations(k) {
        for &slot in &subset {
            for e in exposure.row(slot) {
                let r = &mut residual[e.user as usize];
                if *r == 1.0 {
                    touched.push(e.user);
                }
                *r *= 1.0 - e.prob;
            }
        }
        touched.sort_unstable();
        touched.dedup();
        let value: f64 = touched
            .iter()
            .map(|&u| 1.0 - residual[u as usize])
            .fold(0.0, |acc, x| acc + x);
        for &u in &touched {
            residual[u as usize] = 1.0;
        }
        touched.clear();

        // Near-equal values are ties; the earlier (lexicographically smaller) set wins.
        if best.as_ref().is_none_or(|(_, b)| value > b + 1e-12) {
            best = Some((subset, value));
        }
    }
    Ok(best.unwrap_or((Vec::new(), 0.0)))
}
