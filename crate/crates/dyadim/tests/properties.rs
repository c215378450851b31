//! Property tests for the structural invariants: round trips, conservation,
//! ordering between the statistics, and agreement with the oracle on small
//! random configurations.

use proptest::prelude::*;

use dyadim::dimension::{
    brute_force_oracle, lower_ratio_stat, multi_level_ratio_stat, ratio_stat, upper_ratio_stat,
    DeltaParam, StatKind, StatOptions,
};
use dyadim::measure::{make_product_measure, make_random_measure, Measure};
use dyadim::random::{beta_cdf, derive_generator, sample_uniform_simplex};
use dyadim::tree::{cube_to_path, path_to_cube, NodePath};
use dyadim::LogMass;

fn arb_path() -> impl Strategy<Value = NodePath> {
    (1u8..=5).prop_flat_map(|dim| {
        let fanout = 1u16 << dim;
        proptest::collection::vec(0..fanout as u8, 0..12)
            .prop_map(move |digits| NodePath::from_digits(dim, &digits).expect("digits in range"))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn path_cube_round_trip(path in arb_path()) {
        let cube = path_to_cube(&path);
        prop_assert_eq!(cube.level(), path.level());
        prop_assert_eq!(cube_to_path(&cube), path);
    }

    #[test]
    fn path_display_parse_round_trip(path in arb_path()) {
        let printed = path.to_string();
        let parsed = NodePath::parse(path.ambient_dim(), &printed).expect("printed form parses");
        prop_assert_eq!(parsed, path);
    }

    #[test]
    fn simplex_draws_are_distributions(
        dim in 1u8..=5,
        seed in any::<u64>(),
        raw_digits in proptest::collection::vec(any::<u8>(), 0..10),
    ) {
        let fanout = 1u8 << dim;
        let digits: Vec<u8> = raw_digits.iter().map(|d| d % fanout).collect();
        let node = NodePath::from_digits(dim, &digits).expect("digits in range");
        let mut rng = derive_generator(seed, &node);
        let weights = sample_uniform_simplex(&mut rng, 1usize << dim).expect("valid count");
        let sum: f64 = weights.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        for &w in &weights {
            prop_assert!(w > 0.0 && w < 1.0);
        }
    }

    #[test]
    fn log_mass_multiplication_adds_logs(a in 1e-9f64..1.0, b in 1e-9f64..1.0) {
        let product = LogMass::from_linear(a).expect("positive") * LogMass::from_linear(b).expect("positive");
        prop_assert!((product.log2() - (a.log2() + b.log2())).abs() < 1e-9);
    }

    #[test]
    fn beta_cdf_is_monotone(n in 2u32..=32, lo in 0.0f64..1.0, hi in 0.0f64..1.0) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let f_lo = beta_cdf(lo, n).expect("in range");
        let f_hi = beta_cdf(hi, n).expect("in range");
        prop_assert!(f_lo <= f_hi);
        prop_assert!((0.0..=1.0).contains(&f_lo) && (0.0..=1.0).contains(&f_hi));
    }

    #[test]
    fn delta_parse_display_round_trip(num in 1u64..10_000, den in 1u64..10_000) {
        let delta = DeltaParam::new(num, den).expect("positive rational");
        let parsed: DeltaParam = delta.to_string().parse().expect("display parses");
        prop_assert_eq!(parsed, delta);
    }
}

proptest! {
    // The scan-based cases stream thousands of weight vectors each; keep the
    // case count modest so the suite stays quick.
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lower_never_exceeds_upper(dim in 1u8..=2, seed in any::<u64>(), m in 1u32..=3, level in 0u32..=4) {
        let mu = make_random_measure(dim, seed).expect("valid dim");
        let opts = StatOptions::default();
        let h = upper_ratio_stat(&mu, m, level, &opts).expect("in budget");
        let l = lower_ratio_stat(&mu, m, level, &opts).expect("in budget");
        prop_assert!(l.log2_value <= h.log2_value);
        prop_assert!(l.log2_value >= 0.0);
    }

    #[test]
    fn multi_level_dominates_each_fixed_level(seed in any::<u64>(), m in 1u32..=2, max_level in 1u32..=5) {
        let mu = make_random_measure(1, seed).expect("valid dim");
        let opts = StatOptions::default();
        let multi = multi_level_ratio_stat(&mu, StatKind::Upper, m, max_level, &opts).expect("in budget");
        for level in 1..=max_level {
            let fixed = ratio_stat(&mu, StatKind::Upper, m, level, &opts).expect("in budget");
            prop_assert!(multi.log2_value >= fixed.log2_value);
        }
    }

    #[test]
    fn streaming_agrees_with_oracle(dim in 1u8..=2, seed in any::<u64>(), m in 1u32..=3, level in 1u32..=4) {
        let mu = make_random_measure(dim, seed).expect("valid dim");
        for kind in [StatKind::Upper, StatKind::Lower] {
            let fast = ratio_stat(&mu, kind, m, level, &StatOptions::default()).expect("in budget");
            let slow = brute_force_oracle(&mu, kind, m, level).expect("under node cap");
            prop_assert!((fast.log2_value - slow.log2_value).abs() < 1e-12);
            prop_assert_eq!(fast.witness, slow.witness);
        }
    }

    #[test]
    fn product_measures_ignore_the_homogeneity_shortcut(
        seed in any::<u64>(), m in 1u32..=3, level in 1u32..=3
    ) {
        // A wrapper that hides the homogeneity flag must yield the same
        // statistic through the generic scan.
        struct Opaque<M>(M);
        impl<M: Measure> Measure for Opaque<M> {
            fn ambient_dim(&self) -> u8 {
                self.0.ambient_dim()
            }
            fn edge_weights_into(&self, node: &NodePath, out: &mut [f64]) -> dyadim::Result<()> {
                self.0.edge_weights_into(node, out)
            }
        }

        let mut rng = derive_generator(seed, &NodePath::root(2).expect("valid dim"));
        let weights = sample_uniform_simplex(&mut rng, 4).expect("valid count");
        let fast_mu = make_product_measure(2, &weights).expect("valid weights");
        let slow_mu = Opaque(make_product_measure(2, &weights).expect("valid weights"));
        for kind in [StatKind::Upper, StatKind::Lower] {
            let fast = ratio_stat(&fast_mu, kind, m, level, &StatOptions::default()).expect("in budget");
            let slow = ratio_stat(&slow_mu, kind, m, level, &StatOptions::default()).expect("in budget");
            prop_assert!((fast.log2_value - slow.log2_value).abs() < 1e-12);
            prop_assert_eq!(fast.witness, slow.witness);
        }
    }
}
