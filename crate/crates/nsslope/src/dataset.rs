//! Sample matrix with centered columns and its sample covariance.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// An n x p sample matrix whose columns have been centered to mean zero,
/// together with the sample covariance S = (1/n) X'X.
///
/// Immutable after construction, so shared references are thread safe.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Array2<f64>,
    s: Array2<f64>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// The centered sample matrix.
    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    /// Sample covariance S = (1/n) X'X of the centered data.
    pub fn covariance(&self) -> ArrayView2<'_, f64> {
        self.s.view()
    }
}

/// Center the columns of a raw sample matrix and build the [`Dataset`].
///
/// Requires n >= 2, p >= 2 and all entries finite. The covariance uses the
/// 1/n convention. Idempotent: centering already-centered data is exact up
/// to one rounding of the (tiny) residual means.
pub fn center_columns(mut x: Array2<f64>) -> Result<Dataset> {
    let (n, p) = (x.nrows(), x.ncols());
    if n < 2 || p < 2 {
        return Err(Error::DimensionTooSmall { rows: n, cols: p });
    }
    for ((i, j), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row: i, col: j });
        }
    }
    for mut col in x.columns_mut() {
        let mean = col.sum() / n as f64;
        col.mapv_inplace(|v| v - mean);
    }
    // Fill both triangles from one accumulation so S is exactly symmetric.
    let mut s = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        for j in 0..=i {
            let v = x.column(i).dot(&x.column(j)) / n as f64;
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    Ok(Dataset { x, s })
}
