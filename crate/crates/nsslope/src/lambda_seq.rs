//! Weight schedules for the sorted-L1 penalty.
//!
//! `bh_sequence` is the Benjamini-Hochberg quantile schedule targeting an
//! FDR level q. `adjusted_sequence` inflates it for non-orthogonal designs
//! and monotonizes the result, flattening the tail once it would start to
//! increase.

use crate::error::{Error, Result};
use crate::normal::normal_quantile;
use crate::sorted_l1::LambdaSequence;

/// `lambda_i = Phi^{-1}(1 - i q / (2 d))` for i = 1..d; strictly decreasing.
pub fn bh_sequence(d: usize, q: f64) -> Result<LambdaSequence> {
    if d == 0 {
        return Err(Error::InvalidLambda("need d >= 1".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::ProbabilityOutOfRange(q));
    }
    let mut values = Vec::with_capacity(d);
    for i in 1..=d {
        let tail = i as f64 * q / (2.0 * d as f64);
        let prob = 1.0 - tail;
        if prob <= 0.5 {
            return Err(Error::InvalidLambda(format!(
                "quantile argument {prob} at index {i} would give a non-positive weight"
            )));
        }
        values.push(normal_quantile(prob)?);
    }
    LambdaSequence::new(values)
}

/// The inflated variant `lambda_i = lambda_i^BH * sqrt(1 + w(i-1) *
/// sum_{j<i} lambda_j^2)` with `w(k) = 1/(n-k-1)`, where the sum runs over
/// the already-adjusted values. Built left to right; once a value would
/// exceed its predecessor (or the divisor n-k-1 runs out), the remaining
/// entries are flattened at the last kept value.
pub fn adjusted_sequence(d: usize, q: f64, n: usize) -> Result<LambdaSequence> {
    let bh = bh_sequence(d, q)?;
    let bh = bh.values();
    let mut values = Vec::with_capacity(d);
    values.push(bh[0]);
    let mut sum_sq = bh[0] * bh[0];
    let mut flat_from = d;
    for i in 2..=d {
        let divisor = n as f64 - (i as f64 - 1.0) - 1.0;
        if divisor <= 0.0 {
            flat_from = i - 1;
            break;
        }
        let v = bh[i - 1] * (1.0 + sum_sq / divisor).sqrt();
        if v > values[i - 2] {
            flat_from = i - 1;
            break;
        }
        values.push(v);
        sum_sq += v * v;
    }
    let tail = values[flat_from.min(values.len()) - 1];
    while values.len() < d {
        values.push(tail);
    }
    LambdaSequence::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen with the quantile oracle used in the normal module tests.
    const BH_4_005: [f64; 4] = [
        2.497705474412374,
        2.241402727604947,
        2.0802784525252744,
        1.959963984540054,
    ];

    #[test]
    fn bh_matches_quantile_oracle() {
        let lam = bh_sequence(4, 0.05).unwrap();
        for (got, want) in lam.values().iter().zip(BH_4_005.iter()) {
            assert!((got - want).abs() <= 1e-4, "{got} vs {want}");
        }
    }

    #[test]
    fn bh_single_entry() {
        let lam = bh_sequence(1, 0.05).unwrap();
        assert!((lam.values()[0] - 1.959963984540054).abs() <= 1e-4);
    }

    #[test]
    fn bh_strictly_decreasing_and_positive() {
        for (d, q) in [(3usize, 0.1), (10, 0.05), (39, 0.05), (99, 0.2)] {
            let lam = bh_sequence(d, q).unwrap();
            let v = lam.values();
            assert!(v.iter().all(|x| *x > 0.0));
            for i in 1..d {
                assert!(v[i] < v[i - 1]);
            }
        }
    }

    #[test]
    fn bh_rejects_bad_q() {
        assert!(bh_sequence(4, 0.0).is_err());
        assert!(bh_sequence(4, 1.0).is_err());
        assert!(bh_sequence(0, 0.05).is_err());
    }

    #[test]
    fn bh_decreases_in_q() {
        let a = bh_sequence(6, 0.05).unwrap();
        let b = bh_sequence(6, 0.2).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!(x > y);
        }
    }

    #[test]
    fn adjusted_first_entry_equals_bh() {
        let adj = adjusted_sequence(5, 0.05, 30).unwrap();
        let bh = bh_sequence(5, 0.05).unwrap();
        assert_eq!(adj.values()[0], bh.values()[0]);
    }

    // Independent recomputation of the recursion, frozen offline for
    // d=4, q=0.05, n=100.
    #[test]
    fn adjusted_matches_direct_recursion() {
        let want = [
            2.497705474412374,
            2.3116442692500416,
            2.200974371723826,
            2.121030231013706,
        ];
        let adj = adjusted_sequence(4, 0.05, 100).unwrap();
        for (got, w) in adj.values().iter().zip(want.iter()) {
            assert!((got - w).abs() <= 1e-12, "{got} vs {w}");
        }
    }

    #[test]
    fn adjusted_dominates_bh_before_flattening() {
        let adj = adjusted_sequence(8, 0.05, 200).unwrap();
        let bh = bh_sequence(8, 0.05).unwrap();
        for (a, b) in adj.values().iter().zip(bh.values()) {
            assert!(a >= b);
        }
    }

    #[test]
    fn adjusted_nonincreasing_on_grid_including_small_n() {
        for d in [2usize, 5, 10, 39, 80] {
            for n in [4usize, 6, 20, 100, 500] {
                let adj = adjusted_sequence(d, 0.05, n).unwrap();
                let v = adj.values();
                assert_eq!(v.len(), d);
                for i in 1..d {
                    assert!(
                        v[i] <= v[i - 1],
                        "increase at d={d}, n={n}, i={i}: {} > {}",
                        v[i],
                        v[i - 1]
                    );
                }
                assert!(v.iter().all(|x| *x > 0.0));
            }
        }
    }

    #[test]
    fn small_n_tail_flattens() {
        let adj = adjusted_sequence(10, 0.05, 6).unwrap();
        let v = adj.values();
        // tail must be constant once flattening kicks in
        let last = v[v.len() - 1];
        assert!(v.iter().rev().take(5).all(|x| *x == last));
    }
}
