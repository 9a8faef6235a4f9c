use std::collections::HashSet;

use cocycle_lab::base::{BasePoint, BaseSystem, Leaf, PointKey, SymbolPoint};
use proptest::prelude::*;

fn full_shift() -> BaseSystem {
    BaseSystem::sft(vec![vec![1, 1, 1], vec![1, 1, 1], vec![1, 1, 1]], 0.5).unwrap()
}

fn golden() -> BaseSystem {
    BaseSystem::sft(vec![vec![1, 1], vec![1, 0]], 0.5).unwrap()
}

fn point(sys: &BaseSystem, seed: u64) -> BasePoint {
    sys.sample_points(1, seed).remove(0)
}

fn keys(pts: &[BasePoint]) -> HashSet<PointKey> {
    pts.iter().map(|p| p.key()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stable_leaves_contract(seed in 1u64..10_000, t in -1.0f64..1.0) {
        let sys = BaseSystem::cat_map();
        let c = *sys.constants();
        let x = point(&sys, seed);
        let pair = sys.toral_pair(x.as_torus().unwrap(), t * c.epsilon, Leaf::Stable).unwrap();
        let d0 = sys.dist(&pair.y, &pair.z);
        for n in 0..12 {
            let d = sys.dist(&sys.apply(&pair.y, n), &sys.apply(&pair.z, n));
            prop_assert!(d <= c.c1 * c.lambda.powi(n as i32) * d0 * (1.0 + 1e-9) + 1e-12, "n={n}: {d} vs {d0}");
        }
    }

    #[test]
    fn symbolic_stable_leaves_contract(seed in 0u64..10_000) {
        let sys = full_shift();
        let c = *sys.constants();
        let x = point(&sys, seed);
        for pair in sys.local_leaf_pairs(&x, Leaf::Stable, 4).unwrap() {
            let d0 = sys.dist(&pair.y, &pair.z);
            for n in 0..10 {
                let d = sys.dist(&sys.apply(&pair.y, n), &sys.apply(&pair.z, n));
                prop_assert!(d <= c.c1 * c.lambda.powi(n as i32) * d0 + 1e-15);
            }
        }
    }

    #[test]
    fn bracket_lies_on_both_leaves(seed in 1u64..10_000, dx in -0.1f64..0.1, dy in -0.1f64..0.1) {
        let sys = BaseSystem::cat_map();
        let theta = sys.constants().theta;
        let x = point(&sys, seed);
        let [a, b] = x.as_torus().unwrap().coords();
        let y = BasePoint::torus(a + dx, b + dy);
        prop_assume!(sys.dist(&x, &y) < sys.constants().tau && sys.dist(&x, &y) > 1e-6);
        let z = sys.bracket(&x, &y).unwrap();
        let n = 14;
        let fwd0 = sys.dist(&z, &x).max(1e-300);
        let bwd0 = sys.dist(&z, &y).max(1e-300);
        let fwd = sys.dist(&sys.apply(&z, n), &sys.apply(&x, n));
        let bwd = sys.dist(&sys.apply(&z, -n), &sys.apply(&y, -n));
        prop_assert!(fwd < 1e-4 && bwd < 1e-4, "{fwd} {bwd}");
        if fwd0 > 1e-9 {
            prop_assert!((fwd / fwd0).powf(1.0 / n as f64) <= theta);
        }
        if bwd0 > 1e-9 {
            prop_assert!((bwd / bwd0).powf(1.0 / n as f64) <= theta);
        }
    }

    #[test]
    fn symbolic_group_action_is_exact(seed in 0u64..10_000, m in -8i64..8, n in -8i64..8) {
        for sys in [full_shift(), golden()] {
            let x = point(&sys, seed);
            prop_assert_eq!(sys.apply(&x, m + n), sys.apply(&sys.apply(&x, n), m));
        }
    }

    #[test]
    fn toral_group_action(seed in 1u64..10_000, m in -4i64..=4, n in -4i64..=4) {
        let sys = BaseSystem::cat_map();
        let x = point(&sys, seed);
        let d = sys.dist(&sys.apply(&x, m + n), &sys.apply(&sys.apply(&x, n), m));
        prop_assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn periodic_sets_nest(n in 1u32..=3, k in 1u32..=3) {
        for sys in [BaseSystem::cat_map(), golden(), full_shift()] {
            let small = keys(&sys.periodic_points(n).unwrap());
            let big = keys(&sys.periodic_points(k * n).unwrap());
            prop_assert!(small.is_subset(&big));
        }
    }

    #[test]
    fn closing_returns_exact_periodic_points(idx in 0usize..100, n in 1u32..=5, dx in -1e-4f64..1e-4, dy in -1e-4f64..1e-4) {
        let sys = BaseSystem::cat_map();
        let per = sys.periodic_points(n).unwrap();
        let p = &per[idx % per.len()];
        let [a, b] = p.as_torus().unwrap().coords();
        let z = BasePoint::torus(a + dx, b + dy);
        let (q, rep) = sys.closing(&z, n).unwrap();
        prop_assert!(sys.is_fixed_exact(&q, n));
        prop_assert!(rep.max_ratio <= 1.0 + 1e-9);
    }

    #[test]
    fn symbolic_closing_is_exact(word in proptest::collection::vec(0u8..3, 1..=5), a in 0u8..3, b in 0u8..3) {
        let sys = full_shift();
        let n = word.len() as u32;
        let future: Vec<u8> = word.iter().cycle().take(6 * word.len()).cloned().collect();
        let past: Vec<u8> = future.iter().rev().cloned().collect();
        let z = SymbolPoint::from_parts(past, vec![a], future, vec![b], 3).unwrap();
        let (q, _) = sys.closing(&BasePoint::Symbol(z), n).unwrap();
        prop_assert!(sys.is_fixed_exact(&q, n));
    }
}
