//! Ground-set reduction with a pruned submodularity graph.
//!
//! The graph over slots has edge weight
//! `w(u, v) = I(v | {u}) − I(u | G ∖ {u})` where `G` is the preprocessed ground
//! set. The divergence of `v` from a sample `U` is `min_{u∈U} w(u, v)`. Each
//! round samples `U`, sets it aside, then drops the `(1 − 1/√c)` fraction of the
//! remaining slots with the smallest divergence. Whatever survives plus every
//! sampled slot forms the reduced ground set.
//!
//! Edge weights are evaluated on demand for the `U × remaining` rectangle of
//! each round. [`PruneConfig::eager`] materializes the whole matrix instead,
//! which yields the same values and is only meant for small cross-checks.

use std::collections::HashMap;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{Exposure, ExposureMatrix, SlotId};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Drops slots with zero singleton influence. `singletons` is indexed by slot id.
pub fn preprocess(singletons: &[f64]) -> Vec<SlotId> {
    singletons
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, _)| SlotId(i as u32))
        .collect()
}

/// `I(b | G ∖ {b})` for every `b` in the ground set `G`.
#[derive(Debug, Clone)]
pub struct TailCache {
    tails: Vec<Option<f64>>,
}

impl TailCache {
    pub fn build(exposure: &ExposureMatrix, ground: &[SlotId]) -> Result<Self> {
        // Per user: product of the non-zero factors (1 − p) and the count of
        // factors that are exactly zero, so one factor can be divided out even
        // when the full product vanishes.
        let mut product = vec![1.0f64; exposure.num_users()];
        let mut zeros = vec![0u32; exposure.num_users()];
        let mut tails = vec![None; exposure.num_slots()];
        for &slot in ground {
            exposure.check(slot)?;
            if tails[slot.index()].is_some() {
                continue;
            }
            tails[slot.index()] = Some(0.0);
            for e in exposure.row(slot) {
                let factor = 1.0 - e.prob;
                if factor == 0.0 {
                    zeros[e.user as usize] += 1;
                } else {
                    product[e.user as usize] *= factor;
                }
            }
        }
        for &slot in ground {
            let tail = exposure
                .row(slot)
                .iter()
                .map(|e| {
                    let u = e.user as usize;
                    let factor = 1.0 - e.prob;
                    let others = if factor == 0.0 {
                        if zeros[u] > 1 {
                            0.0
                        } else {
                            product[u]
                        }
                    } else if zeros[u] > 0 {
                        0.0
                    } else {
                        product[u] / factor
                    };
                    e.prob * others
                })
                .fold(0.0, |acc, x| acc + x);
            tails[slot.index()] = Some(tail);
        }
        Ok(Self { tails })
    }

    pub fn get(&self, slot: SlotId) -> Option<f64> {
        self.tails.get(slot.index()).copied().flatten()
    }

    fn require(&self, slot: SlotId) -> Result<f64> {
        self.get(slot).ok_or(Error::UnknownSlot(slot))
    }
}

/// `I(v | {u})` by merging the two sorted exposure rows.
fn gain_given_one(from: &[Exposure], to: &[Exposure]) -> f64 {
    let mut i = 0;
    let mut total = 0.0;
    for e in to {
        while i < from.len() && from[i].user < e.user {
            i += 1;
        }
        let residual = if i < from.len() && from[i].user == e.user {
            1.0 - from[i].prob
        } else {
            1.0
        };
        total += residual * e.prob;
    }
    total
}

fn weight_unchecked(exposure: &ExposureMatrix, tails: &TailCache, from: SlotId, to: SlotId) -> f64 {
    gain_given_one(exposure.row(from), exposure.row(to)) - tails.tails[from.index()].unwrap_or(0.0)
}

/// `w(from, to) = I(to | {from}) − I(from | G ∖ {from})`. May be negative.
pub fn edge_weight(
    exposure: &ExposureMatrix,
    tails: &TailCache,
    from: SlotId,
    to: SlotId,
) -> Result<f64> {
    if from == to {
        return Err(Error::SelfEdge(from));
    }
    tails.require(from)?;
    tails.require(to)?;
    Ok(weight_unchecked(exposure, tails, from, to))
}

/// `min_{u∈sample} w(u, v)`.
pub fn divergence(
    exposure: &ExposureMatrix,
    tails: &TailCache,
    v: SlotId,
    sample: &[SlotId],
) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.contains(&v) {
        return Err(Error::InSample(v));
    }
    sample
        .iter()
        .map(|&u| edge_weight(exposure, tails, u, v))
        .try_fold(f64::INFINITY, |acc, w| Ok(acc.min(w?)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    #[serde(rename = "e")]
    Natural,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "10")]
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    pub r: f64,
    pub c: f64,
    pub log_base: LogBase,
    /// Precompute the full weight matrix instead of evaluating edges on demand.
    pub eager: bool,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            r: 8.0,
            c: 8.0,
            log_base: LogBase::Natural,
            eager: false,
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::PruneParams(format!(
                "r must be positive, got {}",
                self.r
            )));
        }
        if !(self.c.is_finite() && self.c > 1.0) {
            return Err(Error::PruneParams(format!(
                "c must exceed 1, got {}",
                self.c
            )));
        }
        Ok(())
    }

    /// Loop guard `r · log n0`.
    pub fn threshold(&self, n0: usize) -> f64 {
        if n0 == 0 {
            return 0.0;
        }
        self.r * self.log_base.log(n0 as f64)
    }

    /// Slots sampled per round, before clamping to what remains.
    pub fn sample_size(&self, n0: usize) -> usize {
        (self.threshold(n0).ceil() as usize).max(1)
    }

    /// Slots removed from `remaining` in one round.
    pub fn removal_count(&self, remaining: usize, threshold: f64) -> usize {
        let count = ((1.0 - 1.0 / self.c.sqrt()) * remaining as f64).floor() as usize;
        if count == 0 && remaining as f64 > threshold {
            1
        } else {
            count.min(remaining)
        }
    }
}

/// Reference size `c / log(√c) · k · log² n` of the reduced set, with sampling
/// probability 1. Reported only.
pub fn reference_reduced_size(config: &PruneConfig, k: usize, n0: usize) -> f64 {
    if n0 < 2 {
        return 0.0;
    }
    let ln_n = config.log_base.log(n0 as f64);
    config.c / config.log_base.log(config.c.sqrt()) * k as f64 * ln_n * ln_n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneRound {
    pub sampled: usize,
    pub candidates: usize,
    pub removed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneState {
    /// Survivors of the removal rounds, ascending.
    pub remaining: Vec<SlotId>,
    /// Every slot ever drawn into a sample, in draw order.
    pub sampled: Vec<SlotId>,
    pub n0: usize,
    pub config: PruneConfig,
    pub rounds: Vec<PruneRound>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    /// `remaining ∪ sampled`, ascending.
    pub reduced: Vec<SlotId>,
    pub state: PruneState,
}

enum Weights {
    Lazy,
    Eager {
        index: HashMap<SlotId, usize>,
        n: usize,
        matrix: Vec<f64>,
    },
}

impl Weights {
    fn eager(exposure: &ExposureMatrix, tails: &TailCache, ground: &[SlotId]) -> Self {
        let n = ground.len();
        let matrix: Vec<f64> = ground
            .par_iter()
            .flat_map_iter(|&from| {
                ground.iter().map(move |&to| {
                    if from == to {
                        0.0
                    } else {
                        weight_unchecked(exposure, tails, from, to)
                    }
                })
            })
            .collect();
        let index = ground.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Weights::Eager { index, n, matrix }
    }

    fn get(&self, exposure: &ExposureMatrix, tails: &TailCache, from: SlotId, to: SlotId) -> f64 {
        match self {
            Weights::Lazy => weight_unchecked(exposure, tails, from, to),
            Weights::Eager { index, n, matrix } => matrix[index[&from] * n + index[&to]],
        }
    }
}

/// Runs the sampling/removal loop on `ground` and returns the reduced set.
///
/// `n0 = |ground|` fixes the loop guard `|remaining| > r · log n0` and the
/// per-round sample size `⌈r · log n0⌉`. Removal takes the smallest
/// divergences with ties broken by ascending slot id; if the floored removal
/// count is zero while the guard still holds, one slot is removed.
pub fn prune(
    exposure: &ExposureMatrix,
    ground: &[SlotId],
    config: &PruneConfig,
    rng: &mut SeededRng,
) -> Result<PruneOutcome> {
    config.validate()?;
    let mut remaining: Vec<SlotId> = ground.to_vec();
    remaining.sort_unstable();
    remaining.dedup();
    let n0 = remaining.len();
    let tails = TailCache::build(exposure, &remaining)?;
    let weights = if config.eager {
        Weights::eager(exposure, &tails, &remaining)
    } else {
        Weights::Lazy
    };

    let threshold = config.threshold(n0);
    let sample_size = config.sample_size(n0);
    let mut sampled = Vec::new();
    let mut rounds = Vec::new();

    while remaining.len() as f64 > threshold {
        let take = sample_size.min(remaining.len());
        let sample = rng.sample_in_place(&mut remaining, take).to_vec();
        remaining.drain(..take);
        remaining.sort_unstable();
        sampled.extend_from_slice(&sample);

        let candidates = remaining.len();
        let mut scored: Vec<(f64, SlotId)> = remaining
            .par_iter()
            .map(|&v| {
                let div = sample
                    .iter()
                    .map(|&u| weights.get(exposure, &tails, u, v))
                    .fold(f64::INFINITY, f64::min);
                (div, v)
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let removed = config.removal_count(candidates, threshold);
        let mut drop: Vec<SlotId> = scored[..removed].iter().map(|&(_, s)| s).collect();
        drop.sort_unstable();
        remaining.retain(|s| drop.binary_search(s).is_err());

        debug!(
            "prune round {}: sampled {take}, scored {candidates}, removed {removed}, left {}",
            rounds.len() + 1,
            remaining.len()
        );
        rounds.push(PruneRound {
            sampled: take,
            candidates,
            removed,
        });
    }

    let mut reduced: Vec<SlotId> = remaining.iter().chain(&sampled).copied().collect();
    reduced.sort_unstable();
    Ok(PruneOutcome {
        reduced,
        state: PruneState {
            remaining,
            sampled,
            n0,
            config: *config,
            rounds,
        },
    })
}
