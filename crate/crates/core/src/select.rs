//! Final slot selection: incremental greedy (plain or lazy) and baselines.
//!
//! Every selector returns slots in selection order, so any prefix of a
//! `k_max` run is that selector's answer for the smaller `k` (except the
//! random ones, which redraw).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::catalog::{ExposureMatrix, SlotCatalog, SlotId, TrajectoryTuple};
use crate::error::Result;
use crate::influence::{influence, singleton_influences, InfluenceEvaluator};
use crate::psg::{prune, PruneConfig, PruneOutcome};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub chosen: Vec<SlotId>,
    pub influence: f64,
    /// Marginal-gain computations performed.
    pub evaluations: u64,
}

impl Selection {
    fn scored(exposure: &ExposureMatrix, chosen: Vec<SlotId>, evaluations: u64) -> Result<Self> {
        let influence = influence(exposure, &chosen)?;
        Ok(Self {
            chosen,
            influence,
            evaluations,
        })
    }
}

fn sorted_ground(ground: &[SlotId], exposure: &ExposureMatrix) -> Result<Vec<SlotId>> {
    let mut g = ground.to_vec();
    g.sort_unstable();
    g.dedup();
    for &s in &g {
        exposure.check(s)?;
    }
    Ok(g)
}

fn clamp_k(k: usize, ground: usize, what: &str) -> usize {
    if k > ground {
        warn!("{what}: k = {k} exceeds the {ground} available slots, returning all of them");
    }
    k.min(ground)
}

/// Incremental greedy. `lazy` keeps stale gains in a max-heap and re-evaluates
/// only the popped candidate; both modes pick the maximum gain with ties going
/// to the lower slot id, so they return the same sequence.
pub fn greedy(
    exposure: &ExposureMatrix,
    ground: &[SlotId],
    k: usize,
    lazy: bool,
) -> Result<Selection> {
    let ground = sorted_ground(ground, exposure)?;
    let k = clamp_k(k, ground.len(), "greedy");
    let mut eval = InfluenceEvaluator::new(exposure);
    let evaluations = if lazy {
        lazy_rounds(&mut eval, &ground, k)?
    } else {
        eager_rounds(&mut eval, &ground, k)?
    };
    let chosen = eval.chosen().to_vec();
    // The cached value accumulates gains; the reported figure is recomputed.
    Selection::scored(exposure, chosen, evaluations)
}

fn eager_rounds(eval: &mut InfluenceEvaluator<'_>, ground: &[SlotId], k: usize) -> Result<u64> {
    let mut candidates = ground.to_vec();
    let mut evaluations = 0u64;
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for (i, &slot) in candidates.iter().enumerate() {
            let gain = eval.gain_unchecked(slot);
            evaluations += 1;
            // Candidates ascend by id, so strict > keeps the lowest id on ties.
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((i, gain));
            }
        }
        let Some((i, _)) = best else { break };
        let slot = candidates.remove(i);
        eval.commit(slot)?;
    }
    Ok(evaluations)
}

#[derive(Debug)]
struct Stale {
    gain: f64,
    slot: SlotId,
    round: usize,
}

impl PartialEq for Stale {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Stale {}

impl Ord for Stale {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.slot.cmp(&self.slot))
    }
}

impl PartialOrd for Stale {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn lazy_rounds(eval: &mut InfluenceEvaluator<'_>, ground: &[SlotId], k: usize) -> Result<u64> {
    let mut evaluations = 0u64;
    let mut heap: BinaryHeap<Stale> = ground
        .iter()
        .map(|&slot| {
            evaluations += 1;
            Stale {
                gain: eval.gain_unchecked(slot),
                slot,
                round: 0,
            }
        })
        .collect();

    for round in 0..k {
        while let Some(top) = heap.pop() {
            if top.round == round {
                eval.commit(top.slot)?;
                break;
            }
            evaluations += 1;
            heap.push(Stale {
                gain: eval.gain_unchecked(top.slot),
                slot: top.slot,
                round,
            });
        }
    }
    Ok(evaluations)
}

/// Highest singleton influences, ties by slot id. Reports the union's influence.
pub fn top_k(exposure: &ExposureMatrix, ground: &[SlotId], k: usize) -> Result<Selection> {
    let ground = sorted_ground(ground, exposure)?;
    let k = clamp_k(k, ground.len(), "top-k");
    let singles = singleton_influences(exposure);
    let mut order = ground;
    order.sort_by(|a, b| {
        singles[b.index()]
            .total_cmp(&singles[a.index()])
            .then(a.cmp(b))
    });
    order.truncate(k);
    let evaluations = singles.len() as u64;
    Selection::scored(exposure, order, evaluations)
}

/// Number of trajectory tuples each slot covers: same location as the
/// billboard and positive overlap with the window. Counts raw tuples.
pub fn coverage(catalog: &SlotCatalog, trajectories: &[TrajectoryTuple]) -> Vec<u64> {
    let by_loc = catalog.billboards_by_loc();
    let mut counts = vec![0u64; catalog.len()];
    for tuple in trajectories {
        for slot in catalog.exposed_slots(&by_loc, tuple) {
            counts[slot.index()] += 1;
        }
    }
    counts
}

/// Highest coverage first, ties by slot id.
pub fn max_cov(
    exposure: &ExposureMatrix,
    catalog: &SlotCatalog,
    trajectories: &[TrajectoryTuple],
    ground: &[SlotId],
    k: usize,
) -> Result<Selection> {
    let ground = sorted_ground(ground, exposure)?;
    let k = clamp_k(k, ground.len(), "max-cov");
    let counts = coverage(catalog, trajectories);
    let mut order = ground;
    order.sort_by(|a, b| counts[b.index()].cmp(&counts[a.index()]).then(a.cmp(b)));
    order.truncate(k);
    Selection::scored(exposure, order, 0)
}

/// `k` slots uniformly without replacement.
pub fn random_k(
    exposure: &ExposureMatrix,
    ground: &[SlotId],
    k: usize,
    rng: &mut SeededRng,
) -> Result<Selection> {
    let mut pool = sorted_ground(ground, exposure)?;
    let k = clamp_k(k, pool.len(), "random");
    let chosen = rng.sample_in_place(&mut pool, k).to_vec();
    Selection::scored(exposure, chosen, 0)
}

/// Prunes `ground`, then picks `k` of the reduced slots uniformly. The same
/// generator drives both steps.
pub fn psg_random(
    exposure: &ExposureMatrix,
    ground: &[SlotId],
    k: usize,
    config: &PruneConfig,
    rng: &mut SeededRng,
) -> Result<(Selection, PruneOutcome)> {
    let outcome = prune(exposure, ground, config, rng)?;
    let selection = random_k(exposure, &outcome.reduced, k, rng)?;
    Ok((selection, outcome))
}
