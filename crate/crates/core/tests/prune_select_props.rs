mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use slotmax::catalog::SlotId;
use slotmax::harness::brute_force_opt;
use slotmax::influence::{influence, singleton_influences};
use slotmax::psg::{preprocess, prune, PruneConfig, TailCache};
use slotmax::rng::SeededRng;
use slotmax::select::{greedy, psg_random, random_k, top_k};

use common::{dense, naive_opt, random_matrix};

const GUARANTEE: f64 = 1.0 - 1.0 / std::f64::consts::E;

fn small_config() -> PruneConfig {
    PruneConfig {
        r: 2.0,
        c: 4.0,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prune_contained_and_shrinks(seed in any::<u64>(), slots in 20usize..80, eager in any::<bool>()) {
        let mut rng = SeededRng::new(seed);
        let m = random_matrix(&mut rng, slots, 30, 0.15, 1.0, 0.1);
        let ground = preprocess(&singleton_influences(&m));
        let config = PruneConfig { eager, ..small_config() };
        let out = prune(&m, &ground, &config, &mut SeededRng::new(seed)).unwrap();
        let g: BTreeSet<_> = ground.iter().collect();
        let reduced: BTreeSet<_> = out.reduced.iter().collect();
        prop_assert_eq!(reduced.len(), out.reduced.len());
        prop_assert!(reduced.is_subset(&g));
        if (ground.len() as f64) > config.threshold(ground.len()) {
            prop_assert!(out.reduced.len() < ground.len());
        } else {
            prop_assert_eq!(out.reduced.len(), ground.len());
        }
        for s in &out.state.sampled {
            prop_assert!(reduced.contains(s));
        }
    }

    #[test]
    fn prune_eager_matches_lazy(seed in any::<u64>(), slots in 20usize..60) {
        let mut rng = SeededRng::new(seed);
        let m = random_matrix(&mut rng, slots, 25, 0.2, 1.0, 0.0);
        let ground = preprocess(&singleton_influences(&m));
        let lazy = prune(&m, &ground, &small_config(), &mut SeededRng::new(seed)).unwrap();
        let eager_cfg = PruneConfig { eager: true, ..small_config() };
        let eager = prune(&m, &ground, &eager_cfg, &mut SeededRng::new(seed)).unwrap();
        prop_assert_eq!(lazy.reduced, eager.reduced);
        prop_assert_eq!(lazy.state.rounds, eager.state.rounds);
    }

    #[test]
    fn tails_bounded_by_singletons(seed in any::<u64>(), slots in 2usize..30) {
        let mut rng = SeededRng::new(seed);
        let m = random_matrix(&mut rng, slots, 10, 0.3, 1.0, 0.2);
        let single = singleton_influences(&m);
        let ground = preprocess(&single);
        let tails = TailCache::build(&m, &ground).unwrap();
        for &s in &ground {
            let t = tails.get(s).unwrap();
            prop_assert!(t >= -1e-12 && t <= single[s.index()] + 1e-9);
            let rest: Vec<SlotId> = ground.iter().copied().filter(|&x| x != s).collect();
            let expected = influence(&m, &ground).unwrap() - influence(&m, &rest).unwrap();
            prop_assert!((t - expected).abs() <= 1e-9);
        }
    }

    #[test]
    fn greedy_modes_agree(seed in any::<u64>(), slots in 1usize..40, k in 1usize..12) {
        let mut rng = SeededRng::new(seed);
        let m = random_matrix(&mut rng, slots, 20, 0.2, 1.0, 0.1);
        let ground: Vec<SlotId> = (0..slots as u32).map(SlotId).collect();
        let eager = greedy(&m, &ground, k, false).unwrap();
        let lazy = greedy(&m, &ground, k, true).unwrap();
        prop_assert_eq!(&eager.chosen, &lazy.chosen);
        prop_assert!(lazy.evaluations <= eager.evaluations);
        prop_assert_eq!(eager.chosen.len(), k.min(slots));
        let singles = singleton_influences(&m);
        let best_single = singles.iter().copied().fold(0.0, f64::max);
        prop_assert!(eager.influence >= best_single - 1e-9);
    }

    #[test]
    fn greedy_meets_guarantee(seed in any::<u64>(), slots in 1usize..12, k in 1usize..4) {
        let mut rng = SeededRng::new(seed);
        let m = random_matrix(&mut rng, slots, 8, 0.35, 1.0, 0.1);
        let ground: Vec<SlotId> = (0..slots as u32).map(SlotId).collect();
        let opt = naive_opt(&dense(&m), &ground, k);
        let (_, oracle) = brute_force_opt(&m, &ground, k).unwrap();
        prop_assert!((opt - oracle).abs() <= 1e-9);
        let g = greedy(&m, &ground, k, true).unwrap();
        prop_assert!(g.influence >= GUARANTEE * opt - 1e-9);
        prop_assert!(g.influence <= opt + 1e-9);
    }

    #[test]
    fn top_k_reports_union(seed in any::<u64>(), slots in 1usize..20, k in 1usize..6) {
        let mut rng = SeededRng::new(seed);
        let m = random_matrix(&mut rng, slots, 10, 0.3, 1.0, 0.0);
        let ground: Vec<SlotId> = (0..slots as u32).map(SlotId).collect();
        let sel = top_k(&m, &ground, k).unwrap();
        prop_assert!((sel.influence - influence(&m, &sel.chosen).unwrap()).abs() <= 1e-12);
        let singles = singleton_influences(&m);
        let worst_in = sel.chosen.iter().map(|s| singles[s.index()]).fold(f64::INFINITY, f64::min);
        for s in &ground {
            if !sel.chosen.contains(s) {
                prop_assert!(singles[s.index()] <= worst_in);
            }
        }
    }

    #[test]
    fn psg_random_within_reduced(seed in any::<u64>(), slots in 20usize..60, k in 1usize..10) {
        let mut rng = SeededRng::new(seed);
        let m = random_matrix(&mut rng, slots, 20, 0.2, 1.0, 0.0);
        let ground = preprocess(&singleton_influences(&m));
        let (sel, out) = psg_random(&m, &ground, k, &small_config(), &mut SeededRng::new(seed)).unwrap();
        let reduced: BTreeSet<_> = out.reduced.iter().collect();
        prop_assert!(sel.chosen.iter().all(|s| reduced.contains(s)));
        let (again, _) = psg_random(&m, &ground, k, &small_config(), &mut SeededRng::new(seed)).unwrap();
        prop_assert_eq!(sel, again);
    }
}

/// Replays the loop arithmetic on counts alone: n0 = 1000, r = c = 8.
#[test]
fn prune_schedule_for_thousand_slots() {
    let config = PruneConfig::default();
    let n0 = 1000;
    let threshold = config.threshold(n0);
    assert_eq!(config.sample_size(n0), 56);
    let mut remaining = n0;
    let mut rounds = 0;
    while remaining as f64 > threshold {
        let sample = config.sample_size(n0).min(remaining);
        remaining -= sample;
        remaining -= config.removal_count(remaining, threshold).min(remaining);
        rounds += 1;
    }
    // 1000 -> 334 -> 99 -> 16
    assert_eq!(rounds, 3);
    assert_eq!(remaining, 16);

    let mut rng = SeededRng::new(8);
    let m = random_matrix(&mut rng, n0, 200, 0.05, 0.9, 0.0);
    let ground = preprocess(&singleton_influences(&m));
    assert_eq!(ground.len(), n0);
    let real = prune(&m, &ground, &config, &mut rng).unwrap();
    assert_eq!(real.state.rounds.len(), 3);
    assert_eq!(real.state.remaining.len(), 16);
    assert_eq!(real.state.sampled.len(), 3 * 56);
}

#[test]
fn prune_is_seed_deterministic() {
    let mut rng = SeededRng::new(5);
    let m = random_matrix(&mut rng, 200, 60, 0.05, 1.0, 0.0);
    let ground = preprocess(&singleton_influences(&m));
    let a = prune(
        &m,
        &ground,
        &PruneConfig::default(),
        &mut SeededRng::new(11),
    )
    .unwrap();
    let b = prune(
        &m,
        &ground,
        &PruneConfig::default(),
        &mut SeededRng::new(11),
    )
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn random_k_is_uniform() {
    let m = slotmax::ExposureMatrix::from_entries(4, 1, (0..4).map(|s| (s, 0, 0.5))).unwrap();
    let ground: Vec<SlotId> = (0..4).map(SlotId).collect();
    let mut rng = SeededRng::new(2024);
    let mut counts = [0u32; 4];
    let trials = 10_000;
    for _ in 0..trials {
        let sel = random_k(&m, &ground, 1, &mut rng).unwrap();
        counts[sel.chosen[0].index()] += 1;
    }
    let mean = trials as f64 / 4.0;
    let sigma = (trials as f64 * 0.25 * 0.75).sqrt();
    for c in counts {
        assert!((c as f64 - mean).abs() <= 3.0 * sigma, "{counts:?}");
    }
}
