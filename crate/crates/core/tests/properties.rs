use proptest::prelude::*;

use decompound::augmentation::{Imputer, ProposalConfig};
use decompound::diagnostics::err_l1_vec;
use decompound::diophantine::{bounded_partition_count, enumerate, SolutionCache};
use decompound::model::{
    adaptive_k_max, convolve, hellinger_sq, inverse_sequence, kl_divergence, panjer_forward,
    panjer_inverse, BaseDistribution, IncrementData, LevyMeasure,
};
use decompound::plugin::{self, Truncation};

fn base() -> impl Strategy<Value = BaseDistribution> {
    prop::collection::vec(0.0f64..1.0, 1..=8).prop_filter_map("some mass", |mut w| {
        let last = w.len() - 1;
        w[last] += 0.01;
        BaseDistribution::new_renormalised(w).ok()
    })
}

fn pmf(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, len).prop_map(|w| {
        let t: f64 = w.iter().sum();
        w.into_iter().map(|x| x / t).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn panjer_roundtrip(lambda in 0.1f64..5.0, p in base()) {
        let k = adaptive_k_max(lambda, &p).unwrap().max(p.m());
        let q = panjer_forward(lambda, &p, k).unwrap();
        prop_assert!(q.probs().iter().all(|v| *v >= 0.0));
        prop_assert!((q.probs().iter().sum::<f64>() + q.tail_mass() - 1.0).abs() < 1e-12);
        let (l, back) = panjer_inverse(&q, p.m()).unwrap();
        prop_assert!((l - lambda).abs() < 1e-8);
        for (j, b) in back.iter().enumerate() {
            prop_assert!((b - p.get(j + 1)).abs() < 1e-8);
        }
    }

    #[test]
    fn convolution_inverse_is_identity(lambda in 0.1f64..3.0, p in base()) {
        let q = panjer_forward(lambda, &p, 40).unwrap();
        let r = inverse_sequence(&q).unwrap();
        let prod = convolve(r.values(), q.probs());
        let scale = r.l1_norm();
        prop_assert!((prod[0] - 1.0).abs() < 1e-12 * scale);
        for v in &prod[1..q.probs().len()] {
            prop_assert!(v.abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn solution_sets_are_exact(m in 1usize..9, z in 0usize..26) {
        let set = enumerate(m, z).unwrap();
        prop_assert_eq!(set.len() as u128, bounded_partition_count(m, z));
        let rows: Vec<&[u32]> = set.iter().collect();
        for w in rows.windows(2) {
            prop_assert!(w[0] > w[1], "strictly descending lexicographic order");
        }
        for (i, k) in rows.iter().enumerate() {
            let weighted: usize = k.iter().enumerate().map(|(j, &c)| (j + 1) * c as usize).sum();
            prop_assert_eq!(weighted, z);
            prop_assert_eq!(set.index_of(k).unwrap(), i);
        }
        if set.len() >= 2 {
            let n = set.len();
            for i in 0..n {
                let (lo, hi) = set.neighbors(i).unwrap();
                let want = match i {
                    0 => (1, n - 1),
                    i if i == n - 1 => (0, n - 2),
                    i => (i - 1, i + 1),
                };
                prop_assert_eq!((lo, hi), want);
            }
        } else {
            prop_assert!(set.neighbors(0).is_err());
        }
    }

    #[test]
    fn err_l1_is_a_metric(
        a in prop::collection::vec(0.0f64..3.0, 0..60),
        b in prop::collection::vec(0.0f64..3.0, 0..60),
        c in prop::collection::vec(0.0f64..3.0, 0..60),
    ) {
        prop_assert!(err_l1_vec(&a, &a) == 0.0);
        prop_assert!(err_l1_vec(&a, &b) >= 0.0);
        prop_assert_eq!(err_l1_vec(&a, &b), err_l1_vec(&b, &a));
        prop_assert!(err_l1_vec(&a, &c) <= err_l1_vec(&a, &b) + err_l1_vec(&b, &c) + 1e-12);
    }

    #[test]
    fn divergences_are_nonnegative(a in pmf(6), b in pmf(6)) {
        prop_assert!(kl_divergence(&a, &b) >= -1e-15);
        prop_assert!(kl_divergence(&a, &a).abs() < 1e-15);
        let h = hellinger_sq(&a, &b);
        prop_assert!((-1e-15..=2.0 + 1e-12).contains(&h));
    }

    #[test]
    fn plugin_outputs_valid_pmf(counts in prop::collection::vec(0usize..40, 2..12), trunc in prop::bool::ANY) {
        let mut counts = counts;
        counts[0] += 1;
        if counts[1..].iter().all(|&c| c == 0) {
            counts[1] = 1;
        }
        let data = IncrementData::from_counts(&counts, 1.0).unwrap();
        let truncation = if trunc { Truncation::Recursive } else { Truncation::PositivePart };
        match plugin::estimate_with(&data, None, truncation) {
            Ok(est) => {
                prop_assert!(est.p_hat.iter().all(|p| *p >= 0.0));
                prop_assert!((est.p_hat.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(est.nu_hat.iter().all(|v| *v >= 0.0));
                if est.raw_p.iter().all(|p| *p >= 0.0) {
                    let t: f64 = est.raw_p.iter().sum();
                    for (a, b) in est.p_hat.iter().zip(&est.raw_p) {
                        prop_assert!((a - b / t).abs() < 1e-12);
                    }
                }
            }
            Err(decompound::Error::DegenerateEstimate(_)) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn imputation_preserves_constraints(
        zs in prop::collection::vec(0u32..14, 1..20),
        nu in prop::collection::vec(0.01f64..3.0, 6),
        seed in any::<u64>(),
    ) {
        let deltas: Vec<f64> = (0..zs.len()).map(|i| 0.5 + (i % 3) as f64 * 0.5).collect();
        let data = IncrementData::from_parts(&deltas, &zs).unwrap();
        let cache = SolutionCache::default();
        let imputer = Imputer::new(&data, 6, &cache).unwrap();
        let mut state = imputer.initial_state();
        let nu = LevyMeasure::new(nu).unwrap();
        let cfg = ProposalConfig::default();
        for block in 0..30 {
            imputer.sweep(&mut state, &nu, &cfg, seed, block, None);
        }
        prop_assert!(state.validate(&data).is_ok());
        prop_assert_eq!(state.totals().to_vec(), state.column_sums());
    }
}
