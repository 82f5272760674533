use coderank::metrics::{auc_counts, quality_rmse, relevant_count, select_relevant, tau_b, Direction};
use proptest::prelude::*;

/// Values with plenty of ties.
fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        proptest::collection::vec((0..5i32).prop_map(f64::from), n),
        proptest::collection::vec(-10.0..10.0f64, n),
    ]
}

fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2..60usize).prop_flat_map(|n| {
        let mask = proptest::collection::vec(any::<bool>(), n).prop_map(|mut m| {
            m[0] = true;
            m[1] = false;
            m
        });
        (values(n), mask)
    })
}

fn paired() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..60usize).prop_flat_map(|n| (values(n), values(n)))
}

proptest! {
    #[test]
    fn auc_depends_only_on_order((scores, relevant) in scored()) {
        let a = auc_counts(&scores, &relevant).unwrap();
        let mapped: Vec<f64> = scores.iter().map(|s| (s / 4.0).exp() * 3.0 + 1.0).collect();
        prop_assert_eq!(auc_counts(&mapped, &relevant).unwrap(), a);
    }

    #[test]
    fn auc_reverses_with_negated_scores((scores, relevant) in scored()) {
        let a = auc_counts(&scores, &relevant).unwrap();
        let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
        let b = auc_counts(&negated, &relevant).unwrap();
        prop_assert_eq!(a.twice_wins + b.twice_wins, 2 * a.relevant * a.irrelevant);
    }

    #[test]
    fn tau_is_symmetric_and_antisymmetric((x, y) in paired()) {
        let t = tau_b(&x, &y).unwrap();
        let swapped = tau_b(&y, &x).unwrap();
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let flipped = tau_b(&x, &neg).unwrap();
        prop_assert_eq!(t.degenerate, swapped.degenerate);
        prop_assert!((t.value - swapped.value).abs() <= 1e-12);
        prop_assert!((t.value + flipped.value).abs() <= 1e-12);
        prop_assert!(t.value.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn tau_of_a_ranking_with_itself((x, _) in paired()) {
        let t = tau_b(&x, &x).unwrap();
        if !t.degenerate {
            prop_assert!((t.value - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn rmse_bounds((x, y) in paired(), r_max in 2u32..20) {
        let (raw, norm) = quality_rmse(&x, &y, r_max).unwrap();
        let (back, _) = quality_rmse(&y, &x, r_max).unwrap();
        prop_assert_eq!(raw, back);
        let n = x.len() as f64;
        let mean_abs = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
        let max_abs = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(raw >= mean_abs - 1e-12 && raw <= max_abs + 1e-12);
        prop_assert!((norm * f64::from(r_max - 1) - raw).abs() <= 1e-12 * raw.max(1.0));
        prop_assert_eq!(quality_rmse(&x, &x, r_max).unwrap().0, 0.0);
    }

    #[test]
    fn selection_size_and_order((x, _) in paired(), fraction in 0.01..0.99f64) {
        for direction in [Direction::Highest, Direction::Lowest] {
            let flags = select_relevant(&x, fraction, direction).unwrap();
            let k = flags.iter().filter(|&&f| f).count();
            prop_assert_eq!(k, relevant_count(x.len(), fraction));
            prop_assert!(k as f64 >= fraction * x.len() as f64 - 1e-9);
            for (i, &fi) in flags.iter().enumerate() {
                for (j, &fj) in flags.iter().enumerate() {
                    if fi && !fj {
                        let better = match direction {
                            Direction::Highest => x[i] > x[j] || (x[i] == x[j] && i < j),
                            Direction::Lowest => x[i] < x[j] || (x[i] == x[j] && i < j),
                        };
                        prop_assert!(better);
                    }
                }
            }
        }
    }
}

#[test]
fn relevant_count_is_a_ceiling() {
    assert_eq!(relevant_count(200, 0.05), 10);
    assert_eq!(relevant_count(201, 0.05), 11);
    assert_eq!(relevant_count(1000, 0.05), 50);
    assert_eq!(relevant_count(3, 0.05), 1);
}
