mod common;

use proptest::prelude::*;
use slotmax::catalog::SlotId;
use slotmax::influence::{influence, marginal_gain, singleton_influences, InfluenceEvaluator};
use slotmax::ExposureMatrix;

use common::{dense, naive_gain, naive_influence};

fn matrix() -> impl Strategy<Value = ExposureMatrix> {
    (1usize..10, 1usize..8).prop_flat_map(|(slots, users)| {
        let entry = (
            0..slots as u32,
            0..users as u32,
            prop_oneof![Just(1.0), 0.001f64..1.0],
        );
        prop::collection::vec(entry, 0..40)
            .prop_map(move |entries| ExposureMatrix::from_entries(slots, users, entries).unwrap())
    })
}

fn ids(mask: u32, n: usize) -> Vec<SlotId> {
    (0..n as u32)
        .filter(|i| mask >> i & 1 == 1)
        .map(SlotId)
        .collect()
}

proptest! {
    #[test]
    fn matches_definition(m in matrix(), mask in any::<u32>()) {
        let set = ids(mask, m.num_slots());
        let expected = naive_influence(&dense(&m), &set);
        prop_assert!((influence(&m, &set).unwrap() - expected).abs() <= 1e-9);
    }

    #[test]
    fn bounded_and_non_negative(m in matrix(), mask in any::<u32>()) {
        let v = influence(&m, &ids(mask, m.num_slots())).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!(v <= m.num_users() as f64 + 1e-9);
    }

    #[test]
    fn monotone_and_submodular(m in matrix(), a in any::<u32>(), extra in any::<u32>(), b in 0u32..10) {
        let n = m.num_slots();
        let b = SlotId(b % n as u32);
        let small: Vec<SlotId> = ids(a, n).into_iter().filter(|&s| s != b).collect();
        let big: Vec<SlotId> = ids(a | extra, n).into_iter().filter(|&s| s != b).collect();
        let gs = marginal_gain(&m, b, &small).unwrap();
        let gt = marginal_gain(&m, b, &big).unwrap();
        prop_assert!(gs >= gt - 1e-9);
        prop_assert!(gs >= -1e-12);
        prop_assert!((gs - naive_gain(&dense(&m), b, &small)).abs() <= 1e-9);
    }

    #[test]
    fn incremental_agrees_with_scratch(m in matrix(), order in prop::collection::vec(0u32..10, 0..12)) {
        let mut eval = InfluenceEvaluator::new(&m);
        for s in order {
            let s = SlotId(s % m.num_slots() as u32);
            if eval.contains(s) {
                prop_assert!(eval.commit(s).is_err());
                continue;
            }
            let predicted = eval.marginal_gain(s).unwrap();
            let before = eval.value();
            eval.commit(s).unwrap();
            prop_assert!((eval.value() - before - predicted).abs() <= 1e-12);
            let scratch = influence(&m, eval.chosen()).unwrap();
            prop_assert!((eval.value() - scratch).abs() <= 1e-9);
            prop_assert!((eval.recompute() - scratch).abs() <= 1e-9);
            for u in 0..m.num_users() as u32 {
                let r = eval.residual(u);
                prop_assert!((0.0..=1.0).contains(&r));
            }
        }
    }

    #[test]
    fn singletons_match_scratch(m in matrix()) {
        for (s, v) in singleton_influences(&m).into_iter().enumerate() {
            let scratch = influence(&m, &[SlotId(s as u32)]).unwrap();
            prop_assert!((v - scratch).abs() <= 1e-9);
        }
    }
}

#[test]
fn empty_set_is_exactly_zero() {
    let m = ExposureMatrix::from_entries(2, 2, [(0, 0, 0.3), (1, 1, 1.0)]).unwrap();
    assert_eq!(influence(&m, &[]).unwrap(), 0.0);
    assert_eq!(InfluenceEvaluator::new(&m).value(), 0.0);
}
