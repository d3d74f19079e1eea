use equidist_core::arithmetic::{modpow, RationalSeed, PrecisionCap};
use equidist_core::discrepancy::{extreme_discrepancy_1d, star_discrepancy_1d, star_discrepancy_oracle};
use equidist_core::generators::{beta_stream, Family, GeneratorSpec};
use equidist_core::sample::Torus;
use equidist_core::stochastic::{gamma_index, gamma_stream, ByteBits};
use equidist_core::weyl::{weyl_sum, MultiIndex};
use num_bigint::BigUint;
use num_integer::Integer;
use proptest::prelude::*;

fn unit_samples(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn star_discrepancy_bounds_and_order(xs in unit_samples(200)) {
        let n = xs.len() as f64;
        let d = star_discrepancy_1d(&xs).unwrap().value;
        prop_assert!(d >= 0.5 / n - 1e-15 && d <= 1.0);
        let mut rev = xs.clone();
        rev.reverse();
        prop_assert_eq!(star_discrepancy_1d(&rev).unwrap().value, d);
        let e = extreme_discrepancy_1d(&xs).unwrap().value;
        prop_assert!(d <= e + 1e-15 && e <= 2.0 * d + 1e-15);
    }

    #[test]
    fn oracle_matches_closed_form_in_one_dimension(xs in unit_samples(40)) {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let oracle = star_discrepancy_oracle(&pts).unwrap().value;
        let closed = star_discrepancy_1d(&xs).unwrap().value;
        prop_assert!((oracle - closed).abs() < 1e-12, "{} vs {}", oracle, closed);
    }

    #[test]
    fn oracle_is_permutation_invariant(pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 1..24)) {
        let a = star_discrepancy_oracle(&pts).unwrap().value;
        let mut rev = pts.clone();
        rev.reverse();
        prop_assert_eq!(star_discrepancy_oracle(&rev).unwrap().value, a);
        prop_assert!(a > 0.0 && a <= 1.0);
    }

    #[test]
    fn weyl_sums_are_bounded_and_conjugate(
        xs in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 1..100),
        a in -6i64..=6, b in -6i64..=6,
    ) {
        prop_assume!(a != 0 || b != 0);
        let pts: Vec<Vec<Torus>> = xs.iter().map(|p| p.iter().map(|&x| Torus::from_f64(x)).collect()).collect();
        let m = MultiIndex::new(vec![a, b]).unwrap();
        let n = pts.len();
        let w = weyl_sum(&pts, &m, &[n]).unwrap();
        let wn = weyl_sum(&pts, &m.negated(), &[n]).unwrap();
        prop_assert!(w.final_magnitude() <= 1.0 + 1e-12);
        prop_assert!((w.final_value() - wn.final_value().conj()).norm() < 1e-9);
    }

    #[test]
    fn linear_stream_matches_direct_division(p in 1u64..1000, k in 1u32..5, n in 1usize..60) {
        let q = 1009u64;
        let seed = RationalSeed::unit(p, q).unwrap();
        let spec = GeneratorSpec::new(Family::WeylPower { p: k }).unwrap();
        let stream = beta_stream(&spec, &seed, n, PrecisionCap::default()).unwrap();
        for (i, s) in stream.iter().enumerate() {
            let c = BigUint::from(i as u64 + 1).pow(k);
            let expected = (c * p).mod_floor(&BigUint::from(q));
            let expected = expected.to_string().parse::<f64>().unwrap() / q as f64;
            prop_assert!((s.to_f64() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn modpow_matches_repeated_multiplication(b in 0u64..10_000, e in 0u64..200, m in 2u64..10_000) {
        let mut acc = 1u64 % m;
        for _ in 0..e {
            acc = acc * (b % m) % m;
        }
        let got = modpow(&BigUint::from(b), &BigUint::from(e), &BigUint::from(m)).unwrap();
        prop_assert_eq!(got, BigUint::from(acc));
    }

    #[test]
    fn gamma_index_distinct_pairs_distinct(i1 in 1u64..5000, j1 in 1u64..5000, i2 in 1u64..5000, j2 in 1u64..5000) {
        prop_assume!((i1, j1) != (i2, j2));
        prop_assert_ne!(gamma_index(i1, j1).unwrap(), gamma_index(i2, j2).unwrap());
    }

    #[test]
    fn gamma_uniforms_lie_in_unit_interval(bytes in prop::collection::vec(any::<u8>(), 400), bpu in 1u32..=20) {
        let us = gamma_stream(&ByteBits(bytes), 20, bpu).unwrap();
        let grid = (1u64 << bpu) as f64;
        for u in us {
            prop_assert!((0.0..1.0).contains(&u));
            prop_assert_eq!((u * grid).fract(), 0.0);
        }
    }
}
