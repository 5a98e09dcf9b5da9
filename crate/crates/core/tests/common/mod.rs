//! Brute-force references and random instance builders shared by the
//! integration tests. Nothing here calls into the evaluator or selectors.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use slotmax::catalog::{SlotCatalog, SlotId, TrajectoryTuple};
use slotmax::harness::SyntheticSpec;
use slotmax::rng::SeededRng;
use slotmax::ExposureMatrix;

/// Dense `(slot, user) -> prob` copy of a matrix.
pub fn dense(m: &ExposureMatrix) -> Vec<Vec<f64>> {
    (0..m.num_slots() as u32)
        .map(|s| {
            (0..m.num_users() as u32)
                .map(|u| m.prob(SlotId(s), u))
                .collect()
        })
        .collect()
}

/// Influence straight from the definition, users outermost.
pub fn naive_influence(probs: &[Vec<f64>], set: &[SlotId]) -> f64 {
    let users = probs.first().map_or(0, Vec::len);
    let set: BTreeSet<SlotId> = set.iter().copied().collect();
    (0..users)
        .map(|u| {
            1.0 - set
                .iter()
                .map(|s| 1.0 - probs[s.index()][u])
                .product::<f64>()
        })
        .sum()
}

pub fn naive_gain(probs: &[Vec<f64>], slot: SlotId, set: &[SlotId]) -> f64 {
    let mut with = set.to_vec();
    with.push(slot);
    naive_influence(probs, &with) - naive_influence(probs, set)
}

/// Enumerates all k-subsets by bitmask; returns the best value.
pub fn naive_opt(probs: &[Vec<f64>], ground: &[SlotId], k: usize) -> f64 {
    let n = ground.len();
    let k = k.min(n);
    let mut best = 0.0f64;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let set: Vec<SlotId> = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| ground[i])
            .collect();
        best = best.max(naive_influence(probs, &set));
    }
    best
}

/// Quadratic scan over every (slot, tuple) pair: same location and a
/// positive-length intersection of the half-open intervals.
pub fn quadratic_pairs(
    cat: &SlotCatalog,
    tuples: &[TrajectoryTuple],
) -> BTreeMap<(u32, String), u64> {
    let mut out = BTreeMap::new();
    for slot in &cat.slots {
        let loc = &cat.billboards[slot.billboard].loc;
        for t in tuples {
            let lo = t.t_start.max(slot.window.start);
            let hi = t.t_end.min(slot.window.end);
            if &t.loc == loc && lo < hi {
                *out.entry((slot.slot_id.0, t.user_id.clone())).or_insert(0) += 1;
            }
        }
    }
    out
}

/// Per-slot tuple counts from [`quadratic_pairs`].
pub fn quadratic_coverage(cat: &SlotCatalog, tuples: &[TrajectoryTuple]) -> Vec<u64> {
    let mut counts = vec![0; cat.len()];
    for ((slot, _), n) in quadratic_pairs(cat, tuples) {
        counts[slot as usize] += n;
    }
    counts
}

/// Random sparse matrix. `max_prob` caps the probabilities; `zero_slots` is the
/// chance a slot gets no exposures at all.
pub fn random_matrix(
    rng: &mut SeededRng,
    slots: usize,
    users: usize,
    density: f64,
    max_prob: f64,
    zero_slots: f64,
) -> ExposureMatrix {
    let mut entries = Vec::new();
    for s in 0..slots as u32 {
        if rng.unit() < zero_slots {
            continue;
        }
        for u in 0..users as u32 {
            if rng.unit() < density {
                // (0, max_prob], occasionally exactly max_prob
                let p = if rng.below(8) == 0 {
                    max_prob
                } else {
                    max_prob * (1.0 - rng.unit())
                };
                entries.push((s, u, p));
            }
        }
    }
    ExposureMatrix::from_entries(slots, users, entries).unwrap()
}

/// Small generator spec yielding at most `billboards * windows` slots.
pub fn tiny_spec(rng: &mut SeededRng, max_slots: usize) -> SyntheticSpec {
    let windows = 1 + rng.below(3) as i64;
    let billboards = (1 + rng.below((max_slots as u64 / windows as u64).max(1))) as usize;
    SyntheticSpec {
        billboards,
        locations: 1 + rng.below(4) as usize,
        users: 3 + rng.below(25) as usize,
        tuples: 5 + rng.below(60) as usize,
        t_start: 0,
        t_end: windows * 600,
        slot_seconds: 600,
        zipf_exponent: rng.unit() * 1.5,
        dwell_min: 30,
        dwell_max: 600,
        panel_min: 50,
        panel_max: 500,
        seed: rng.next_u64(),
    }
}

/// The ~2000-slot shape used for pruning-quality checks.
pub fn medium_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        billboards: 100,
        locations: 150,
        users: 5000,
        tuples: 40_000,
        t_start: 0,
        t_end: 72_000,
        slot_seconds: 3600,
        zipf_exponent: 1.0,
        seed,
        ..Default::default()
    }
}

pub fn random_subset(rng: &mut SeededRng, ground: &[SlotId], p: f64) -> Vec<SlotId> {
    ground.iter().copied().filter(|_| rng.unit() < p).collect()
}
