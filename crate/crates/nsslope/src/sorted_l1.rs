//! The sorted-L1 norm and its proximal operator.
//!
//! `J(b) = sum_i lambda_i * |b|_(i)` where `|b|_(i)` is the i-th largest
//! magnitude and the weights are nonincreasing and positive. The prox is
//! computed by the stack-based pool-adjacent-violators scheme in
//! O(d log d): sort magnitudes, subtract the weights, pool adjacent
//! violators of monotonicity, clip the pooled averages at zero, unsort.

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};

/// A positive, nonincreasing weight vector for the sorted-L1 norm.
///
/// Nonincreasing (rather than strictly decreasing) is deliberate: the
/// adjusted weight construction produces ties after monotonization.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSequence {
    values: Vec<f64>,
}

impl LambdaSequence {
    /// Validates positivity, finiteness and exact nonincreasing order.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidLambda("sequence is empty".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v <= 0.0 {
                return Err(Error::InvalidLambda(format!(
                    "entry {i} is {v}, need a finite positive value"
                )));
            }
        }
        for i in 1..values.len() {
            if values[i] > values[i - 1] {
                return Err(Error::InvalidLambda(format!(
                    "entry {i} increases: {} > {}",
                    values[i],
                    values[i - 1]
                )));
            }
        }
        Ok(Self { values })
    }

    /// Constant sequence; the norm then collapses to `value * l1`.
    pub fn uniform(d: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; d])
    }

    /// Elementwise multiple by a positive factor (order is preserved).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !factor.is_finite() || factor <= 0.0 {
            return Err(Error::InvalidLambda(format!(
                "scale factor must be finite and positive, got {factor}"
            )));
        }
        Self::new(self.values.iter().map(|v| v * factor).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Evaluate `sum_i lambda_i |beta|_(i)`.
pub fn sorted_l1_norm(beta: ArrayView1<'_, f64>, lambda: &LambdaSequence) -> Result<f64> {
    if beta.len() != lambda.len() {
        return Err(Error::DimensionMismatch(format!(
            "beta has length {}, lambda has length {}",
            beta.len(),
            lambda.len()
        )));
    }
    let mut mags: Vec<f64> = beta.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(mags
        .iter()
        .zip(lambda.values())
        .map(|(m, l)| m * l)
        .sum())
}

/// Proximal operator of the sorted-L1 norm:
/// `argmin_x 0.5 ||x - z||^2 + J_lambda(x)`.
pub fn prox_sorted_l1(z: ArrayView1<'_, f64>, lambda: &LambdaSequence) -> Result<Array1<f64>> {
    let d = z.len();
    if lambda.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "z has length {d}, lambda has length {}",
            lambda.len()
        )));
    }
    if let Some((i, _)) = z.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { row: 0, col: i });
    }

    // Stable sort by descending magnitude; ties keep original index order.
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| z[b].abs().partial_cmp(&z[a].abs()).unwrap());

    // Blocks kept as (start, average, length); merging while the previous
    // block average does not exceed the current one restores monotonicity.
    let mut start: Vec<usize> = Vec::with_capacity(d);
    let mut avg: Vec<f64> = Vec::with_capacity(d);
    let mut len: Vec<usize> = Vec::with_capacity(d);
    for (i, &idx) in order.iter().enumerate() {
        let w = z[idx].abs() - lambda.values()[i];
        start.push(i);
        avg.push(w);
        len.push(1);
        while avg.len() > 1 && avg[avg.len() - 2] <= avg[avg.len() - 1] {
            let a2 = avg.pop().unwrap();
            let l2 = len.pop().unwrap();
            start.pop();
            let k = avg.len() - 1;
            avg[k] = (avg[k] * len[k] as f64 + a2 * l2 as f64) / (len[k] + l2) as f64;
            len[k] += l2;
        }
    }

    // Clip pooled values at zero only after pooling, then undo the
    // permutation and restore signs.
    let mut out = Array1::<f64>::zeros(d);
    for b in 0..avg.len() {
        let v = avg[b].max(0.0);
        for pos in start[b]..start[b] + len[b] {
            let idx = order[pos];
            out[idx] = if z[idx] < 0.0 { -v } else { v };
        }
    }
    Ok(out)
}
