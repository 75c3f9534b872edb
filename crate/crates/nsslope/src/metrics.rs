//! Support-recovery and estimation-error metrics against a ground truth.
//!
//! Edges are unordered pairs counted on the symmetrized estimate;
//! FDR = V/(R v 1) with V the false discoveries and R the rejections.

use std::collections::BTreeSet;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::PrecisionEstimate;
use crate::synth::GroundTruthModel;

/// Per-fit metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub fdr: f64,
    pub power: f64,
    pub mse_diag: f64,
    pub mse_offdiag: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub total_rejections: usize,
    pub true_edge_count: usize,
}

/// Mean and standard error of one metric across repetitions.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub se: f64,
}

/// Aggregate over a batch of repetitions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateReport {
    pub count: usize,
    pub fdr: Summary,
    pub power: Summary,
    pub mse_diag: Summary,
    pub mse_offdiag: Summary,
    pub true_positives: Summary,
    pub false_positives: Summary,
    pub total_rejections: Summary,
}

/// Compare the support and entries of an estimate against the truth.
pub fn edge_metrics(
    estimate: &PrecisionEstimate,
    truth: &GroundTruthModel,
    zero_tol: f64,
) -> Result<MetricsReport> {
    report_from_matrix(estimate.theta(), truth.theta(), truth.edge_set(), zero_tol)
}

/// Same as [`edge_metrics`] but starting from a bare (already symmetrized)
/// matrix, e.g. one read back from disk.
pub fn report_from_matrix(
    theta_hat: ArrayView2<'_, f64>,
    theta_true: ArrayView2<'_, f64>,
    true_edges: &BTreeSet<(usize, usize)>,
    zero_tol: f64,
) -> Result<MetricsReport> {
    let p = theta_hat.nrows();
    if theta_hat.ncols() != p || theta_true.nrows() != p || theta_true.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "estimate is {}x{}, truth is {}x{}",
            theta_hat.nrows(),
            theta_hat.ncols(),
            theta_true.nrows(),
            theta_true.ncols()
        )));
    }

    let mut true_positives = 0usize;
    let mut false_positives = 0usize;
    let mut rejections = 0usize;
    for i in 0..p {
        for j in (i + 1)..p {
            let discovered = theta_hat[(i, j)].abs() > zero_tol || theta_hat[(j, i)].abs() > zero_tol;
            if discovered {
                rejections += 1;
                if true_edges.contains(&(i, j)) {
                    true_positives += 1;
                } else {
                    false_positives += 1;
                }
            }
        }
    }
    let (mse_diag, mse_offdiag) = mse_from_matrices(theta_hat, theta_true);
    Ok(MetricsReport {
        fdr: false_positives as f64 / rejections.max(1) as f64,
        power: true_positives as f64 / true_edges.len().max(1) as f64,
        mse_diag,
        mse_offdiag,
        true_positives,
        false_positives,
        total_rejections: rejections,
        true_edge_count: true_edges.len(),
    })
}

/// Mean squared errors of the diagonal and of all off-diagonal entries.
pub fn mse_metrics(estimate: &PrecisionEstimate, truth: &GroundTruthModel) -> Result<(f64, f64)> {
    let p = estimate.p();
    if truth.p() != p {
        return Err(Error::DimensionMismatch(format!(
            "estimate has p = {p}, truth has p = {}",
            truth.p()
        )));
    }
    Ok(mse_from_matrices(estimate.theta(), truth.theta()))
}

fn mse_from_matrices(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> (f64, f64) {
    let p = a.nrows();
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..p {
        for j in 0..p {
            let d = a[(i, j)] - b[(i, j)];
            if i == j {
                diag += d * d;
            } else {
                off += d * d;
            }
        }
    }
    (diag / p as f64, off / (p * (p - 1)) as f64)
}

/// Means and standard errors across repetitions. A single report aggregates
/// to itself with zero standard errors.
pub fn aggregate(reports: &[MetricsReport]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("no metrics reports to aggregate".into()));
    }
    let summarize = |get: &dyn Fn(&MetricsReport) -> f64| -> Summary {
        let m = reports.len() as f64;
        let mean = reports.iter().map(|r| get(r)).sum::<f64>() / m;
        let se = if reports.len() < 2 {
            0.0
        } else {
            let var = reports
                .iter()
                .map(|r| {
                    let d = get(r) - mean;
                    d * d
                })
                .sum::<f64>()
                / (m - 1.0);
            (var / m).sqrt()
        };
        Summary { mean, se }
    };
    Ok(AggregateReport {
        count: reports.len(),
        fdr: summarize(&|r| r.fdr),
        power: summarize(&|r| r.power),
        mse_diag: summarize(&|r| r.mse_diag),
        mse_offdiag: summarize(&|r| r.mse_offdiag),
        true_positives: summarize(&|r| r.true_positives as f64),
        false_positives: summarize(&|r| r.false_positives as f64),
        total_rejections: summarize(&|r| r.total_rejections as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sym_from(edges: &[(usize, usize, f64)], p: usize) -> Array2<f64> {
        let mut m = Array2::<f64>::eye(p);
        for &(i, j, v) in edges {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    #[test]
    fn perfect_recovery() {
        let truth_theta = sym_from(&[(0, 1, -0.3)], 3);
        let mut edges = BTreeSet::new();
        edges.insert((0, 1));
        let r =
            report_from_matrix(truth_theta.view(), truth_theta.view(), &edges, 1e-10).unwrap();
        assert_eq!(r.fdr, 0.0);
        assert_eq!(r.power, 1.0);
        assert_eq!((r.mse_diag, r.mse_offdiag), (0.0, 0.0));
    }

    #[test]
    fn empty_support_uses_r_or_one_guard() {
        let truth_theta = sym_from(&[(0, 1, -0.3)], 3);
        let est = Array2::<f64>::eye(3);
        let mut edges = BTreeSet::new();
        edges.insert((0, 1));
        let r = report_from_matrix(est.view(), truth_theta.view(), &edges, 1e-10).unwrap();
        assert_eq!(r.fdr, 0.0);
        assert_eq!(r.power, 0.0);
        assert_eq!(r.total_rejections, 0);
    }

    #[test]
    fn half_false_discoveries() {
        let truth_theta = sym_from(&[(0, 1, -0.3)], 3);
        let est = sym_from(&[(0, 1, -0.2), (0, 2, 0.1)], 3);
        let mut edges = BTreeSet::new();
        edges.insert((0, 1));
        let r = report_from_matrix(est.view(), truth_theta.view(), &edges, 1e-10).unwrap();
        assert_eq!(r.fdr, 0.5);
        assert_eq!(r.power, 1.0);
        assert_eq!(r.true_positives + r.false_positives, r.total_rejections);
    }

    #[test]
    fn constant_diagonal_shift_isolates_mse_diag() {
        let truth_theta = sym_from(&[(0, 1, -0.3)], 4);
        let mut est = truth_theta.clone();
        for i in 0..4 {
            est[(i, i)] += 0.1;
        }
        let mut edges = BTreeSet::new();
        edges.insert((0, 1));
        let r = report_from_matrix(est.view(), truth_theta.view(), &edges, 1e-10).unwrap();
        assert!((r.mse_diag - 0.01).abs() <= 1e-15);
        assert_eq!(r.mse_offdiag, 0.0);
    }

    #[test]
    fn mse_matches_double_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let p = 5;
        let a = Array2::from_shape_fn((p, p), |_| rng.gen_range(-1.0..1.0));
        let b = Array2::from_shape_fn((p, p), |_| rng.gen_range(-1.0..1.0));
        let (d, o) = mse_from_matrices(a.view(), b.view());
        let mut dd = 0.0;
        let mut oo = 0.0;
        for i in 0..p {
            for j in 0..p {
                let e = (a[(i, j)] - b[(i, j)]).powi(2);
                if i == j {
                    dd += e;
                } else {
                    oo += e;
                }
            }
        }
        assert!((d - dd / p as f64).abs() <= 1e-15);
        assert!((o - oo / (p * (p - 1)) as f64).abs() <= 1e-15);
    }

    #[test]
    fn aggregate_examples() {
        let r = MetricsReport {
            fdr: 0.0,
            power: 1.0,
            mse_diag: 0.1,
            mse_offdiag: 0.2,
            true_positives: 3,
            false_positives: 0,
            total_rejections: 3,
            true_edge_count: 3,
        };
        let single = aggregate(&[r.clone()]).unwrap();
        assert_eq!(single.count, 1);
        assert_eq!(single.fdr.mean, 0.0);
        assert_eq!(single.fdr.se, 0.0);

        let twin = aggregate(&[r.clone(), r.clone()]).unwrap();
        assert_eq!(twin.power.mean, 1.0);
        assert_eq!(twin.power.se, 0.0);

        let mut r2 = r.clone();
        r2.fdr = 0.1;
        let mixed = aggregate(&[r, r2]).unwrap();
        assert!((mixed.fdr.mean - 0.05).abs() <= 1e-15);
        assert!(mixed.fdr.se > 0.0);

        assert!(aggregate(&[]).is_err());
    }
}
