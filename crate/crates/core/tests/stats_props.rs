use drivestyle::stats::{kruskal_wallis, mid_ranks, posthoc_bonferroni};
use proptest::prelude::*;

fn groups_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec((0i32..8).prop_map(f64::from), 1..8), 2..5)
        .prop_filter("at least three observations", |g| g.iter().map(Vec::len).sum::<usize>() >= 3)
}

proptest! {
    #[test]
    fn h_ignores_order_within_groups(groups in groups_strategy(), seed: u64) {
        let base = kruskal_wallis(&groups).unwrap();
        let mut shuffled = groups.clone();
        for (i, g) in shuffled.iter_mut().enumerate() {
            let len = g.len();
            g.rotate_left(((seed >> i) as usize) % len);
            g.reverse();
        }
        let again = kruskal_wallis(&shuffled).unwrap();
        prop_assert!((base.h - again.h).abs() <= 1e-12 * base.h.max(1.0));
    }

    #[test]
    fn h_ignores_monotone_transforms(groups in groups_strategy()) {
        let base = kruskal_wallis(&groups).unwrap();
        let transformed: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|&x| (0.3 * x).exp() * 5.0 - 2.0).collect()).collect();
        let again = kruskal_wallis(&transformed).unwrap();
        prop_assert!((base.h - again.h).abs() <= 1e-12 * base.h.max(1.0));
        let pb = posthoc_bonferroni(&groups).unwrap();
        let pt = posthoc_bonferroni(&transformed).unwrap();
        for (a, b) in pb.iter().zip(&pt) {
            prop_assert!((a.z - b.z).abs() <= 1e-12 * a.z.abs().max(1.0));
        }
    }

    #[test]
    fn rank_sum_is_conserved(values in proptest::collection::vec((0i32..20).prop_map(f64::from), 1..60)) {
        let n = values.len() as f64;
        let sum: f64 = mid_ranks(&values).iter().sum();
        prop_assert_eq!(sum, n * (n + 1.0) / 2.0);
    }

    #[test]
    fn p_values_are_probabilities(groups in groups_strategy()) {
        let kw = kruskal_wallis(&groups).unwrap();
        prop_assert!(kw.h >= 0.0);
        prop_assert!(kw.p_value > 0.0 && kw.p_value <= 1.0);
        for p in posthoc_bonferroni(&groups).unwrap() {
            prop_assert!(p.p_raw <= p.p_adjusted && p.p_adjusted <= 1.0);
        }
    }
}

#[test]
fn mid_ranks_share_ties() {
    assert_eq!(mid_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
}
