use std::collections::HashSet;

use num_bigint::BigUint;
use proptest::prelude::*;

use wordgrowth::analysis::{gk_estimate, growth_from_complexity};
use wordgrowth::pbw::{enveloping_growth, euler_product, euler_product_by_convolution};
use wordgrowth::sbm::{build_sb_sets, generate_s_prefix, GrowthTarget};
use wordgrowth::words::{complexity_profile, distinct_factors, profile_of_prefix, Periodic, ThueMorse, WordPrefix};
use wordgrowth::wreath::compose_growth_bounds;
use wordgrowth::{GrowthTab, Label};

fn naive_factors(word: &[u32], n: usize) -> usize {
    word.windows(n).collect::<HashSet<_>>().len()
}

#[test]
fn thue_morse_complexity_is_known() {
    // p(n) for n = 1..=16 of the Thue-Morse word.
    let want = [2u64, 4, 6, 10, 12, 16, 20, 22, 24, 28, 32, 36, 40, 42, 44, 46];
    let p = complexity_profile(&ThueMorse, 16, 4096).unwrap();
    assert_eq!(p.values, want);
    assert_eq!(p.horizon, 16);
}

#[test]
fn s_word_growth_is_an_algebra_growth() {
    let f = GrowthTarget::new((0..=8).map(|k| BigUint::from(2u32) << k).collect()).unwrap();
    let sets = build_sb_sets(&f, 8, false).unwrap();
    let prefix = generate_s_prefix(&sets, 256).unwrap();
    let g = growth_from_complexity(&profile_of_prefix(&prefix, 64).unwrap());
    assert!(g.is_strictly_increasing());
    assert!(g.is_submultiplicative());
}

#[test]
fn polynomial_growth_has_its_degree() {
    for d in 1..=4u32 {
        let g = GrowthTab::tabulate(2048, Label::Exact, |n| BigUint::from(n as u64 + 1).pow(d));
        let e = gk_estimate(&g).unwrap();
        assert!((e.limsup_est - f64::from(d)).abs() < 0.05, "d = {d}: {e:?}");
        assert!(e.liminf_est <= e.limsup_est);
    }
}

proptest! {
    #[test]
    fn distinct_factors_match_enumeration(
        word in prop::collection::vec(0u32..3, 1..300),
        n in 1usize..20,
    ) {
        prop_assume!(n <= word.len());
        let prefix = WordPrefix::new(word.clone(), "p");
        prop_assert_eq!(distinct_factors(&prefix, n).unwrap(), naive_factors(&word, n));
    }

    #[test]
    fn periodic_complexity_is_bounded_by_period(pattern in prop::collection::vec(0u32..3, 1..12)) {
        let q = pattern.len() as u64;
        let p = complexity_profile(&Periodic::new(pattern), 20, 400).unwrap();
        for (n, &v) in p.values.iter().enumerate().take(p.horizon) {
            prop_assert!(v <= q, "p({}) = {} > {}", n + 1, v, q);
        }
    }

    #[test]
    fn euler_product_routes_agree(b in prop::collection::vec(0u64..5, 1..12), n in 1usize..40) {
        prop_assert_eq!(euler_product(&b, n).unwrap(), euler_product_by_convolution(&b, n).unwrap());
    }

    #[test]
    fn enveloping_growth_dominates_the_lie_growth(b in prop::collection::vec(0u64..6, 1..30)) {
        let n = b.len();
        let (g, _) = enveloping_growth(&b, n).unwrap();
        let mut lie = 1u64;
        for k in 0..=n {
            if k >= 1 {
                lie += b[k - 1];
            }
            prop_assert!(g.values[k] >= BigUint::from(lie));
        }
    }

    #[test]
    fn composed_bounds_are_ordered(
        base in prop::collection::vec(0u64..4, 1..40),
        map in prop::collection::vec(0u64..4, 1..40),
    ) {
        let len = base.len().min(map.len());
        let running = |steps: &[u64]| {
            let mut acc = 0u64;
            GrowthTab::from_u64s(steps[..len].iter().map(|s| { acc += s + 1; acc }), Label::Exact)
        };
        let (lower, upper) = compose_growth_bounds(&running(&base), &running(&map)).unwrap();
        for (l, u) in lower.values.iter().zip(&upper.values) {
            prop_assert!(l <= u);
        }
    }
}
