use proptest::prelude::*;
use tensorconc::bounds::{logconcave_bound, regime_from_ranks, script_e_n_from_ranks, theorem23_bound};

fn ranks_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1.0f64..200.0, 2..=5)
}

proptest! {
    #[test]
    fn permutation_invariance(ranks in ranks_strategy(), n in 2.0f64..1e6, rot in 0usize..5) {
        let mut perm = ranks.clone();
        let k = rot % perm.len();
        perm.rotate_left(k);
        perm.reverse();
        let a = script_e_n_from_ranks(&ranks, n).unwrap();
        let b = script_e_n_from_ranks(&perm, n).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
        let ra = regime_from_ranks(&ranks, n).unwrap();
        let rb = regime_from_ranks(&perm, n).unwrap();
        prop_assert_eq!(&ra.sorted_ranks, &rb.sorted_ranks);
        prop_assert_eq!(ra.t, rb.t);
        prop_assert!((ra.simplified() - rb.simplified()).abs() <= 1e-12 * ra.simplified());
        let dims: Vec<usize> = ranks.iter().map(|r| r.ceil() as usize).collect();
        let mut pd = dims.clone();
        pd.reverse();
        let la = logconcave_bound(&dims, n).unwrap();
        prop_assert!((la - logconcave_bound(&pd, n).unwrap()).abs() <= 1e-12 * la);
        let ones = vec![1.0; ranks.len()];
        let ta = theorem23_bound(&ranks, &ones, n).unwrap().value;
        let tb = theorem23_bound(&perm, &ones, n).unwrap().value;
        prop_assert!((ta - tb).abs() <= 1e-12 * ta);
    }

    #[test]
    fn monotone_in_each_rank(ranks in ranks_strategy(), n in 2.0f64..1e6, k in 0usize..5, bump in 0.0f64..50.0) {
        let k = k % ranks.len();
        let mut up = ranks.clone();
        up[k] += bump;
        prop_assert!(script_e_n_from_ranks(&up, n).unwrap() >= script_e_n_from_ranks(&ranks, n).unwrap());
        let ones = vec![1.0; ranks.len()];
        prop_assert!(theorem23_bound(&up, &ones, n).unwrap().value >= theorem23_bound(&ranks, &ones, n).unwrap().value);
        let dims: Vec<usize> = ranks.iter().map(|r| r.ceil() as usize).collect();
        let mut dup = dims.clone();
        dup[k] += bump.ceil() as usize;
        prop_assert!(logconcave_bound(&dup, n).unwrap() >= logconcave_bound(&dims, n).unwrap());
    }

    #[test]
    fn simplified_bound_within_two_to_the_p(ranks in ranks_strategy(), n in 3.0f64..1e8) {
        let e = script_e_n_from_ranks(&ranks, n).unwrap();
        let s = regime_from_ranks(&ranks, n).unwrap().simplified();
        let factor = 2f64.powi(ranks.len() as i32);
        prop_assert!(s <= e * (1.0 + 1e-12));
        prop_assert!(e <= factor * s);
    }

    #[test]
    fn regime_index_in_range(ranks in ranks_strategy(), n in 2.0f64..1e8) {
        let r = regime_from_ranks(&ranks, n).unwrap();
        prop_assert!(r.t <= ranks.len());
        prop_assert_eq!(r.t, ranks.iter().filter(|&&x| x >= n.ln()).count());
    }
}

/// Smallest `ln N` from which the product terms are non-increasing in `N`.
fn monotone_from(slope: impl Fn(f64) -> f64) -> f64 {
    let mut ln = 2f64.ln();
    while slope(ln) > 0.0 {
        ln += 0.01;
    }
    ln
}

#[test]
fn bounds_decrease_in_n_on_grids() {
    for p in 2..=4usize {
        for &r in &[1.0f64, 2.0, 8.0, 64.0] {
            let ranks = vec![r; p];
            let gamma = vec![r.sqrt(); p];
            let ones = vec![1.0; p];
            let dims = vec![r as usize; p];
            let grid: Vec<f64> = (0..400).map(|i| 3.0 * 1.05f64.powi(i)).collect();
            for w in grid.windows(2) {
                assert!(script_e_n_from_ranks(&ranks, w[1]).unwrap() <= script_e_n_from_ranks(&ranks, w[0]).unwrap());
                assert!(
                    theorem23_bound(&gamma, &ones, w[1]).unwrap().value
                        <= theorem23_bound(&gamma, &ones, w[0]).unwrap().value
                );
            }
            // The log-concave product term grows while ln N < p - 1 for small dims.
            let start = monotone_from(|ln| p as f64 / ((r.sqrt()) + ln) - 1.0).exp().max(3.0);
            let grid: Vec<f64> = (0..400).map(|i| start * 1.05f64.powi(i)).collect();
            for w in grid.windows(2) {
                assert!(logconcave_bound(&dims, w[1]).unwrap() <= logconcave_bound(&dims, w[0]).unwrap());
            }
        }
    }
}
