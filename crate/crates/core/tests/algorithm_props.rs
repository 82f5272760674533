use std::collections::BTreeMap;

use coderank::{run_aa, run_algorithm, AlgorithmConfig, AlgorithmKind, RatingDataset, RatingMode, RatingScale};
use proptest::prelude::*;

fn kinds() -> impl Strategy<Value = AlgorithmKind> {
    prop::sample::select(AlgorithmKind::ALL.to_vec())
}

/// Connected-enough datasets: isolated users and objects are pruned away.
fn datasets() -> impl Strategy<Value = RatingDataset> {
    (2..10usize, 2..10usize, 2u32..=8, any::<bool>())
        .prop_flat_map(|(n, m, r_max, discrete)| {
            let value = if discrete {
                (1..=r_max).prop_map(f64::from).boxed()
            } else {
                (1.0..=f64::from(r_max)).boxed()
            };
            let cells = proptest::collection::btree_map((0..n, 0..m), value, 1..=n * m);
            (Just(n), Just(m), Just(r_max), Just(discrete), cells)
        })
        .prop_map(
            |(n, m, r_max, discrete, cells): (_, _, _, _, BTreeMap<(usize, usize), f64>)| {
                let mode = if discrete {
                    RatingMode::Discrete
                } else {
                    RatingMode::Continuous
                };
                let scale = RatingScale::new(r_max, mode).unwrap();
                let d = RatingDataset::new(cells.into_iter().map(|((u, o), r)| (u, o, r)), n, m, scale).unwrap();
                d.prune().unwrap().0
            },
        )
}

fn tight(kind: AlgorithmKind) -> AlgorithmConfig {
    AlgorithmConfig {
        convergence_threshold: 1e-12,
        max_iterations: 20_000,
        ..AlgorithmConfig::new(kind)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn weights_nonnegative_and_quality_within_ratings(d in datasets(), kind in kinds()) {
        let result = run_algorithm(&d, &AlgorithmConfig::new(kind)).unwrap();
        prop_assert!(result.weights.iter().all(|w| w.is_finite() && *w >= 0.0));
        if kind == AlgorithmKind::Yzlm {
            prop_assert!(result.weights.iter().all(|w| *w > 0.0));
        }
        for (o, &q) in result.quality.iter().enumerate() {
            let (_, ratings) = d.object_column(o);
            let lo = ratings.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ratings.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(q >= lo - 1e-12 && q <= hi + 1e-12, "q={} outside [{}, {}]", q, lo, hi);
        }
    }

    #[test]
    fn runs_are_bitwise_deterministic(d in datasets(), kind in kinds()) {
        let config = AlgorithmConfig::new(kind);
        prop_assert_eq!(run_algorithm(&d, &config).unwrap(), run_algorithm(&d, &config).unwrap());
    }

    #[test]
    fn yzlm_without_penalty_is_the_plain_mean(d in datasets()) {
        let aa = run_aa(&d).unwrap();
        let y = run_algorithm(&d, &AlgorithmConfig::new(AlgorithmKind::Yzlm).with_beta(0.0)).unwrap();
        for (a, b) in aa.quality.iter().zip(&y.quality) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    /// Stretching the scale about 1 by `k` stretches every estimate the same
    /// way once ε and Δ are rescaled to match.
    #[test]
    fn stretch_equivariance(d in datasets(), kind in kinds(), k in 2u32..5) {
        let kf = f64::from(k);
        let r_max = 1 + k * (d.scale().r_max() - 1);
        let scale = RatingScale::new(r_max, d.scale().mode()).unwrap();
        let stretched = RatingDataset::new(
            d.triples().map(|(u, o, r)| (u, o, 1.0 + kf * (r - 1.0))),
            d.num_users(),
            d.num_objects(),
            scale,
        ).unwrap();
        let base = tight(kind);
        let config = AlgorithmConfig {
            epsilon: base.epsilon * kf * kf,
            convergence_threshold: base.convergence_threshold * kf,
            ..base
        };
        let a = run_algorithm(&d, &base).unwrap();
        let b = run_algorithm(&stretched, &config).unwrap();
        prop_assume!(a.converged && b.converged);
        for (qa, qb) in a.quality.iter().zip(&b.quality) {
            prop_assert!((1.0 + kf * (qa - 1.0) - qb).abs() <= 1e-7 * kf, "{} vs {}", qa, qb);
        }
    }

    /// Relabelling users and objects permutes the output and changes nothing else.
    #[test]
    fn relabelling_invariance(d in datasets(), kind in kinds(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut users: Vec<usize> = (0..d.num_users()).collect();
        let mut objects: Vec<usize> = (0..d.num_objects()).collect();
        users.shuffle(&mut rng);
        objects.shuffle(&mut rng);
        let relabelled = RatingDataset::new(
            d.triples().map(|(u, o, r)| (users[u], objects[o], r)),
            d.num_users(),
            d.num_objects(),
            d.scale(),
        ).unwrap();
        let config = tight(kind);
        let a = run_algorithm(&d, &config).unwrap();
        let b = run_algorithm(&relabelled, &config).unwrap();
        prop_assume!(a.converged && b.converged);
        for (o, &q) in a.quality.iter().enumerate() {
            prop_assert!((q - b.quality[objects[o]]).abs() <= 1e-8, "{} vs {}", q, b.quality[objects[o]]);
        }
    }
}
