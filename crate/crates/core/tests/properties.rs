//! 500-case randomized property suites (see `common`).

mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(config())]

    #[test]
    fn cross_char_norms_agree(n in 1usize..=3, seed in any::<u64>()) {
        prop_assert!(cross_char_equality(n, seed) <= SLACK);
    }

    #[test]
    fn cross_norm_below_top_d(n in 1usize..=3, seed in any::<u64>()) {
        prop_assert!(char_norm_chain(n, seed) <= SLACK);
    }

    #[test]
    fn clifford_chain_holds(n in 1usize..=3, seed in any::<u64>()) {
        prop_assert!(clifford_bound_chain(n, seed) <= SLACK);
    }

    #[test]
    fn variances_nonnegative(
        n in 1usize..=3, seed in any::<u64>(), sel in any::<u8>(), k in 0usize..=12, l in 0usize..=6,
        nf in 1usize..=20, u in 0.0..=1.0f64, p in 0.0..=1.0f64,
    ) {
        prop_assert!(nonnegativity(n, seed, sel, k, l, nf, u, p) <= SLACK);
    }

    #[test]
    fn alpha_beta_ordered(n in 1usize..=12, k in 1usize..=12, l in 1usize..=6) {
        prop_assert!(alpha_beta_chain(n, k, l) <= SLACK);
    }

    #[test]
    fn depolarizing_scales_quadratically(
        n in 1usize..=3, seed in any::<u64>(), sel in any::<u8>(), k in 0usize..=3, l in 0usize..=4, p in 0.0..=1.0f64,
    ) {
        prop_assert!(depolarizing_scaling(n, seed, sel, k, l, p) <= SLACK);
    }

    // alpha_k and beta_k grow with d toward gamma^k
    #[test]
    fn alpha_beta_increase_with_d(n in 1usize..=11, k in 1usize..=11) {
        let k = k.min(n);
        let lo = thrifty_shadow::variance::alpha_beta((n as f64).exp2(), k).unwrap();
        let hi = thrifty_shadow::variance::alpha_beta((n as f64 + 1.0).exp2(), k).unwrap();
        prop_assert!(lo.alpha <= hi.alpha + SLACK && lo.beta <= hi.beta + SLACK);
    }
}
