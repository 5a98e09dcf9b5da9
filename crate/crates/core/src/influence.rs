//! Closed-form influence of a slot set and its marginal gains.
//!
//! `I(S) = Σ_u [1 − Π_{b∈S} (1 − Pr(b, u))]`. The evaluator keeps the residual
//! product `r_u` per user so a marginal gain `Σ_{u∈b} r_u · Pr(b, u)` only
//! touches the users exposed to `b`.

use std::collections::BTreeSet;

use crate::catalog::{ExposureMatrix, SlotId};
use crate::error::{Error, Result};

/// Influence of `set` evaluated from scratch. Duplicate ids count once.
pub fn influence(exposure: &ExposureMatrix, set: &[SlotId]) -> Result<f64> {
    let unique: BTreeSet<SlotId> = set.iter().copied().collect();
    let mut residual = vec![1.0f64; exposure.num_users()];
    for &slot in &unique {
        exposure.check(slot)?;
        for e in exposure.row(slot) {
            residual[e.user as usize] *= 1.0 - e.prob;
        }
    }
    Ok(residual.iter().map(|r| 1.0 - r).fold(0.0, |acc, x| acc + x))
}

/// `I(S ∪ {b}) − I(S)`, evaluated from scratch.
pub fn marginal_gain(exposure: &ExposureMatrix, slot: SlotId, set: &[SlotId]) -> Result<f64> {
    exposure.check(slot)?;
    if set.contains(&slot) {
        return Err(Error::AlreadyInSet(slot));
    }
    let mut eval = InfluenceEvaluator::new(exposure);
    for &s in set.iter().collect::<BTreeSet<_>>() {
        eval.commit(s)?;
    }
    eval.marginal_gain(slot)
}

/// `I({b})` for every slot, in slot order.
pub fn singleton_influences(exposure: &ExposureMatrix) -> Vec<f64> {
    (0..exposure.num_slots() as u32)
        .map(|s| {
            exposure
                .row(SlotId(s))
                .iter()
                .map(|e| e.prob)
                .fold(0.0, |acc, x| acc + x)
        })
        .collect()
}

/// Incremental evaluator over a growing set `S`.
///
/// Reads (`marginal_gain`, `value`) take `&self`; `commit` takes `&mut self`.
#[derive(Debug, Clone)]
pub struct InfluenceEvaluator<'a> {
    exposure: &'a ExposureMatrix,
    in_set: Vec<bool>,
    chosen: Vec<SlotId>,
    residual: Vec<f64>,
    value: f64,
}

impl<'a> InfluenceEvaluator<'a> {
    pub fn new(exposure: &'a ExposureMatrix) -> Self {
        Self {
            exposure,
            in_set: vec![false; exposure.num_slots()],
            chosen: Vec::new(),
            residual: vec![1.0; exposure.num_users()],
            value: 0.0,
        }
    }

    pub fn exposure(&self) -> &'a ExposureMatrix {
        self.exposure
    }

    /// Cached `I(S)`.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Committed slots in commit order.
    pub fn chosen(&self) -> &[SlotId] {
        &self.chosen
    }

    pub fn contains(&self, slot: SlotId) -> bool {
        self.in_set.get(slot.index()).copied().unwrap_or(false)
    }

    pub fn residual(&self, user: u32) -> f64 {
        self.residual[user as usize]
    }

    /// Gain without the membership check. The caller guarantees `slot ∉ S`.
    #[inline]
    pub(crate) fn gain_unchecked(&self, slot: SlotId) -> f64 {
        self.exposure
            .row(slot)
            .iter()
            .map(|e| self.residual[e.user as usize] * e.prob)
            .fold(0.0, |acc, x| acc + x)
    }

    pub fn marginal_gain(&self, slot: SlotId) -> Result<f64> {
        self.exposure.check(slot)?;
        if self.contains(slot) {
            return Err(Error::AlreadyInSet(slot));
        }
        Ok(self.gain_unchecked(slot))
    }

    /// Adds `slot` to `S` and returns its marginal gain.
    pub fn commit(&mut self, slot: SlotId) -> Result<f64> {
        let gain = self.marginal_gain(slot)?;
        for e in self.exposure.row(slot) {
            self.residual[e.user as usize] *= 1.0 - e.prob;
        }
        self.in_set[slot.index()] = true;
        self.chosen.push(slot);
        self.value += gain;
        Ok(gain)
    }

    /// `Σ_u (1 − r_u)` recomputed from the residuals.
    pub fn recompute(&self) -> f64 {
        self.residual
            .iter()
            .map(|r| 1.0 - r)
            .fold(0.0, |acc, x| acc + x)
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    /// Independent per-user product: loops users outermost and queries `prob`.
    fn oracle(exposure: &ExposureMatrix, set: &[SlotId]) -> f64 {
        (0..exposure.num_users() as u32)
            .map(|u| {
                1.0 - set
                    .iter()
                    .map(|&s| 1.0 - exposure.prob(s, u))
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn unexposed_slot_gain_is_positive_zero() {
        let m = three_slot();
        let eval = InfluenceEvaluator::new(&m);
        let gain = eval.marginal_gain(EMPTY).unwrap();
        assert_eq!(gain.to_bits(), 0.0f64.to_bits());
        assert_eq!(
            singleton_influences(&m)[EMPTY.index()].to_bits(),
            0.0f64.to_bits()
        );
    }

    #[test]
    fn worked_influence_values() {
        let m = three_slot();
        assert_eq!(influence(&m, &[]).unwrap(), 0.0);
        for (set, expected) in [(vec![S1, S2], 0.75), (vec![S1, S3], 1.5)] {
            let o = oracle(&m, &set);
            assert!((o - expected).abs() < 1e-12);
            assert!((influence(&m, &set).unwrap() - o).abs() < 1e-9);
        }
        assert!(matches!(
            influence(&m, &[SlotId(9)]),
            Err(Error::UnknownSlot(_))
        ));
    }

    #[test]
    fn worked_marginal_gains() {
        let m = three_slot();
        let two_evals = oracle(&m, &[S1, S2]) - oracle(&m, &[S1]);
        assert!((two_evals - 0.25).abs() < 1e-12);
        assert!((marginal_gain(&m, S2, &[S1]).unwrap() - 0.25).abs() < 1e-9);
        assert_eq!(marginal_gain(&m, EMPTY, &[S1, S3]).unwrap(), 0.0);
        assert!((marginal_gain(&m, S3, &[]).unwrap() - 1.0).abs() < 1e-9);
        assert!(matches!(
            marginal_gain(&m, S1, &[S1]),
            Err(Error::AlreadyInSet(_))
        ));
    }

    #[test]
    fn commit_tracks_influence() {
        let m = three_slot();
        let mut eval = InfluenceEvaluator::new(&m);
        assert_eq!(eval.value(), 0.0);
        eval.commit(S1).unwrap();
        assert!((eval.value() - 0.5).abs() < 1e-9);
        assert!(matches!(eval.commit(S1), Err(Error::AlreadyInSet(_))));

        let mut eval = InfluenceEvaluator::new(&m);
        eval.commit(S3).unwrap();
        eval.commit(S1).unwrap();
        assert!((eval.value() - 1.5).abs() < 1e-9);
        assert!((eval.value() - oracle(&m, eval.chosen())).abs() < 1e-9);
        assert_eq!(eval.chosen(), &[S3, S1]);
        // Pr = 1 drives the residual to exactly zero.
        assert_eq!(eval.residual(1), 0.0);
    }

    #[test]
    fn singletons() {
        let m = three_slot();
        let s = singleton_influences(&m);
        assert_eq!(s, vec![0.5, 0.5, 1.0, 0.0]);
    }
}
