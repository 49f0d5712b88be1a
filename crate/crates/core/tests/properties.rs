use maxmin_core::design::{
    cosine_similarity, weights_from_str, weights_to_string, CombinerWeights,
};
use maxmin_core::iq::{decode_cf32, encode_cf32};
use maxmin_core::montecarlo::{q_function, q_inv};
use maxmin_core::sensing::statistic_from_branches;
use maxmin_core::sigkit::{qpsk_map, CpRatio};
use maxmin_core::{Complex64, Loading, PulseSpec};
use proptest::prelude::*;

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(
        (-1e3f64..1e3, -1e3f64..1e3).prop_map(|(re, im)| Complex64::new(re, im)),
        len,
    )
}

proptest! {
    #[test]
    fn qpsk_symbols_have_unit_modulus(bits in prop::collection::vec(0u8..=1, 0..64).prop_filter("even", |b| b.len() % 2 == 0)) {
        for s in qpsk_map(&bits).unwrap() {
            prop_assert!((s.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cp_ratio_text_round_trips(den in 2u32..=512, num_frac in 0.0f64..=0.5) {
        let num = (num_frac * den as f64).floor() as u32;
        let cp = CpRatio::new(num, den).unwrap();
        let back: CpRatio = cp.to_string().parse().unwrap();
        prop_assert_eq!(back.value(), cp.value());
    }

    #[test]
    fn cf32_round_trip_is_within_single_precision(x in complex_vec(32)) {
        let back = decode_cf32(&encode_cf32(&x)).unwrap();
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).norm() <= 1e-7 * a.norm().max(1e-30) * 2.0);
        }
    }

    #[test]
    fn statistic_ignores_common_scaling(z in complex_vec(64), e in complex_vec(64), k in -3i32..=3) {
        prop_assume!(e.iter().any(|v| v.norm() > 1e-3));
        let c = 10f64.powi(k);
        let t0 = statistic_from_branches(&z, &e).unwrap();
        let zs: Vec<Complex64> = z.iter().map(|v| v * c).collect();
        let es: Vec<Complex64> = e.iter().map(|v| v * c).collect();
        let t1 = statistic_from_branches(&zs, &es).unwrap();
        prop_assert!((t0 - t1).abs() <= 1e-12 * t0.abs().max(1.0));
    }

    #[test]
    fn cosine_similarity_is_bounded_and_symmetric(a in complex_vec(8), b in complex_vec(8)) {
        prop_assume!(a.iter().any(|v| v.norm() > 1e-6) && b.iter().any(|v| v.norm() > 1e-6));
        let ab = cosine_similarity(&a, &b);
        prop_assert!(ab.abs() <= 1.0 + 1e-12);
        prop_assert!((ab - cosine_similarity(&b, &a)).abs() < 1e-12);
        prop_assert!((cosine_similarity(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn q_inverse_round_trips(p in 1e-9f64..(1.0 - 1e-9)) {
        prop_assert!((q_function(q_inv(p).unwrap()) - p).abs() <= 1e-10);
    }

    #[test]
    fn weights_text_round_trips_bit_exactly(a in complex_vec(8), b in complex_vec(8), g in 0.0f64..1.0) {
        let w = CombinerWeights {
            alpha_min: a,
            alpha_max: b,
            gamma_min: g / 3.0,
            gamma_max: g,
            gamma_d: g - g / 3.0,
            spec: PulseSpec::with_rolloff(0.3).unwrap(),
            truncation_k: 64,
            loading: Loading::default(),
        };
        let back = weights_from_str(&weights_to_string(&w).unwrap()).unwrap();
        prop_assert_eq!(back.alpha_min, w.alpha_min);
        prop_assert_eq!(back.alpha_max, w.alpha_max);
        prop_assert_eq!(back.gamma_min, w.gamma_min);
        prop_assert_eq!(back.gamma_max, w.gamma_max);
    }
}
