//! Ground-truth covariance/precision structures and seeded multivariate
//! normal sampling for the synthetic experiments.
//!
//! Sampling is reproducible across platforms: normal variates come from the
//! inverse-CDF transform of uniforms drawn from a ChaCha8 stream (a fixed,
//! counter-based generator), so a seed pins the output bit for bit.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, ArrayView2};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{center_columns, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, spd_inverse};
use crate::normal::normal_quantile;

/// Support threshold used when reading edges off a dense precision matrix.
pub const EDGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Block,
    Hub,
}

/// Parameters of one synthetic experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub structure: Structure,
    pub p: usize,
    pub n: usize,
    pub block_size: usize,
    pub off_diag_value: f64,
    pub hub_value: f64,
    pub repetitions: usize,
    pub seed: u64,
    pub q: f64,
    pub alpha: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            structure: Structure::Block,
            p: 40,
            n: 100,
            block_size: 4,
            off_diag_value: 0.3,
            hub_value: 0.2,
            repetitions: 25,
            seed: 0,
            q: 0.05,
            alpha: 0.05,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidConfig("need p >= 2".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidConfig("need n >= 2".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("need at least one repetition".into()));
        }
        if !(self.q > 0.0 && self.q < 1.0) || !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(
                "q and alpha must lie strictly in (0, 1)".into(),
            ));
        }
        if self.structure == Structure::Block {
            if self.block_size == 0 || self.p % self.block_size != 0 {
                return Err(Error::InvalidConfig(format!(
                    "p = {} must be a multiple of block_size = {}",
                    self.p, self.block_size
                )));
            }
        }
        Ok(())
    }

    /// Build the ground truth this configuration describes.
    pub fn build_model(&self) -> Result<GroundTruthModel> {
        self.validate()?;
        match self.structure {
            Structure::Block => {
                make_block_model(self.p, self.block_size, 1.0, self.off_diag_value)
            }
            Structure::Hub => make_hub_model(self.p, self.hub_value),
        }
    }
}

/// True covariance, true precision and the edge set of the precision
/// support.
#[derive(Debug, Clone)]
pub struct GroundTruthModel {
    sigma: Array2<f64>,
    theta: Array2<f64>,
    edge_set: BTreeSet<(usize, usize)>,
}

impl GroundTruthModel {
    pub fn p(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma(&self) -> ArrayView2<'_, f64> {
        self.sigma.view()
    }

    pub fn theta(&self) -> ArrayView2<'_, f64> {
        self.theta.view()
    }

    /// Unordered pairs (i, j), i < j, with a nonzero precision entry.
    pub fn edge_set(&self) -> &BTreeSet<(usize, usize)> {
        &self.edge_set
    }

    /// Rebuild a model from stored parts (deserialized sidecars); runs the
    /// same validity checks as the generators.
    pub fn from_parts(
        sigma: Array2<f64>,
        theta: Array2<f64>,
        edge_set: BTreeSet<(usize, usize)>,
    ) -> Result<Self> {
        let model = Self {
            sigma,
            theta,
            edge_set,
        };
        model.verify()?;
        Ok(model)
    }

    // Cholesky must succeed and sigma*theta must equal the identity to 1e-8.
    fn verify(&self) -> Result<()> {
        let p = self.sigma.nrows();
        if self.sigma.ncols() != p || self.theta.nrows() != p || self.theta.ncols() != p {
            return Err(Error::DimensionMismatch(
                "sigma and theta must be square with matching size".into(),
            ));
        }
        cholesky_lower(&self.sigma)?;
        let prod = self.sigma.dot(&self.theta);
        for i in 0..p {
            for j in 0..p {
                let want = if i == j { 1.0 } else { 0.0 };
                if (prod[(i, j)] - want).abs() > 1e-8 {
                    return Err(Error::InvalidConfig(format!(
                        "sigma * theta deviates from identity at ({i}, {j}) by {}",
                        (prod[(i, j)] - want).abs()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Block-diagonal ground truth: each block of the precision matrix has
/// `diag_value` on the diagonal and `-off_value` off the diagonal, so block
/// members are positively correlated (`off_value` is the association
/// strength, and positive definiteness needs |off_value| < 1/(block_size-1)
/// for unit diagonal). The covariance is the blockwise analytic inverse.
pub fn make_block_model(
    p: usize,
    block_size: usize,
    diag_value: f64,
    off_value: f64,
) -> Result<GroundTruthModel> {
    if block_size == 0 || p == 0 || p % block_size != 0 {
        return Err(Error::InvalidConfig(format!(
            "p = {p} must be a positive multiple of block_size = {block_size}"
        )));
    }
    let a = diag_value;
    let c = -off_value;
    let k = block_size as f64;
    // Eigenvalues of one block are a - c and a + (k-1)c; both must be
    // positive for the analytic inverse to exist.
    let tail = a - c;
    let head = a + (k - 1.0) * c;
    if tail <= 0.0 || head <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }

    let mut theta = Array2::<f64>::zeros((p, p));
    let mut sigma = Array2::<f64>::zeros((p, p));
    let mut edge_set = BTreeSet::new();
    for b0 in (0..p).step_by(block_size) {
        for r in 0..block_size {
            for s in 0..block_size {
                let (i, j) = (b0 + r, b0 + s);
                theta[(i, j)] = if r == s { a } else { c };
                // B^{-1} = 1/(a-c) [I - c/(a+(k-1)c) * ones]
                let common = -c / (head * tail);
                sigma[(i, j)] = common + if r == s { 1.0 / tail } else { 0.0 };
                if r < s && off_value != 0.0 {
                    edge_set.insert((i, j));
                }
            }
        }
    }
    let model = GroundTruthModel {
        sigma,
        theta,
        edge_set,
    };
    model.verify()?;
    Ok(model)
}

/// Hub ground truth: a unit-diagonal covariance with `hub_value` placed
/// down the first column and along the last row, then projected onto the
/// symmetric matrices. The asymmetric placement cannot be a covariance
/// verbatim, so the realized link strength is hub_value/2. The precision
/// matrix comes from dense SPD inversion and the edge set from its support.
pub fn make_hub_model(p: usize, hub_value: f64) -> Result<GroundTruthModel> {
    if p < 2 {
        return Err(Error::InvalidConfig("need p >= 2 for a hub model".into()));
    }
    let mut m = Array2::<f64>::eye(p);
    for i in 1..p {
        m[(i, 0)] = hub_value;
    }
    for j in 0..p - 1 {
        m[(p - 1, j)] = hub_value;
    }
    let mut sigma = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        sigma[(i, i)] = m[(i, i)];
        for j in (i + 1)..p {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    let theta = spd_inverse(&sigma)?;
    let mut edge_set = BTreeSet::new();
    for i in 0..p {
        for j in (i + 1)..p {
            if theta[(i, j)].abs() > EDGE_TOL {
                edge_set.insert((i, j));
            }
        }
    }
    let model = GroundTruthModel {
        sigma,
        theta,
        edge_set,
    };
    model.verify()?;
    Ok(model)
}

// Uniform in the open interval (0, 1) from 53 high bits plus a half-ulp
// offset, so the inverse CDF never sees an endpoint.
fn uniform_open01(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Seeded stream of standard normal variates (ChaCha8 + inverse CDF).
pub struct GaussianSampler {
    rng: ChaCha8Rng,
}

impl GaussianSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_standard_normal(&mut self) -> f64 {
        normal_quantile(uniform_open01(self.rng.next_u64()))
            .expect("uniform_open01 stays inside (0, 1)")
    }
}

/// Draw n rows from N(0, sigma) with the given seed and return them as a
/// centered [`Dataset`]. Row j is L z_j with L the lower Cholesky factor;
/// variates are consumed row-major.
pub fn sample_mvn(model: &GroundTruthModel, n: usize, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidConfig("need n >= 2 samples".into()));
    }
    let p = model.p();
    let l = cholesky_lower(&model.sigma)?;
    let mut sampler = GaussianSampler::new(seed);
    let mut x = Array2::<f64>::zeros((n, p));
    let mut z = Array1::<f64>::zeros(p);
    for r in 0..n {
        for k in 0..p {
            z[k] = sampler.next_standard_normal();
        }
        for j in 0..p {
            // lower triangular: row j of L touches z[0..=j]
            let mut acc = 0.0;
            for k in 0..=j {
                acc += l[(j, k)] * z[k];
            }
            x[(r, j)] = acc;
        }
    }
    center_columns(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn block_model_shape_and_edges() {
        let m = make_block_model(500, 4, 1.0, 0.3).unwrap();
        assert_eq!(m.p(), 500);
        // 125 blocks of size 4, C(4,2) = 6 pairs each
        assert_eq!(m.edge_set().len(), 125 * 6);
        let eye = Array2::<f64>::eye(500);
        let prod = m.sigma().dot(&m.theta());
        assert!(max_abs_diff(&prod, &eye) <= 1e-8);
    }

    #[test]
    fn block_model_zero_off_value_is_identity() {
        let m = make_block_model(8, 4, 1.0, 0.0).unwrap();
        assert_eq!(m.sigma(), Array2::<f64>::eye(8).view());
        assert_eq!(m.theta(), Array2::<f64>::eye(8).view());
        assert!(m.edge_set().is_empty());
    }

    #[test]
    fn block_model_single_block_inverse() {
        let m = make_block_model(4, 4, 1.0, 0.3).unwrap();
        let prod = m.sigma().dot(&m.theta());
        assert!(max_abs_diff(&prod, &Array2::<f64>::eye(4)) <= 1e-10);
        // within-block correlation is strongly positive
        let corr = m.sigma()[(0, 1)] / m.sigma()[(0, 0)];
        assert!(corr > 0.7, "corr = {corr}");
    }

    #[test]
    fn block_model_rejects_indefinite() {
        assert!(make_block_model(8, 4, 1.0, 0.34).is_err());
        assert!(make_block_model(9, 4, 1.0, 0.3).is_err());
    }

    #[test]
    fn hub_model_matches_paper_shape() {
        let m = make_hub_model(20, 0.2).unwrap();
        assert_eq!(m.p(), 20);
        // realized symmetric links are hub_value / 2
        assert_eq!(m.sigma()[(5, 0)], 0.1);
        assert_eq!(m.sigma()[(19, 5)], 0.1);
        assert_eq!(m.sigma()[(19, 0)], 0.1);
        assert_eq!(m.sigma()[(3, 7)], 0.0);
        let prod = m.sigma().dot(&m.theta());
        assert!(max_abs_diff(&prod, &Array2::<f64>::eye(20)) <= 1e-10);
    }

    #[test]
    fn hub_model_zero_value_is_identity() {
        let m = make_hub_model(6, 0.0).unwrap();
        assert_eq!(m.sigma(), Array2::<f64>::eye(6).view());
        assert!(m.edge_set().is_empty());
    }

    #[test]
    fn hub_model_small_inverse_consistency() {
        let m = make_hub_model(5, 0.2).unwrap();
        let prod = m.sigma().dot(&m.theta());
        assert!(max_abs_diff(&prod, &Array2::<f64>::eye(5)) <= 1e-10);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let m = make_block_model(8, 4, 1.0, 0.3).unwrap();
        let a = sample_mvn(&m, 20, 99).unwrap();
        let b = sample_mvn(&m, 20, 99).unwrap();
        assert_eq!(a.x(), b.x());
        let c = sample_mvn(&m, 20, 100).unwrap();
        assert_ne!(a.x(), c.x());
    }

    #[test]
    fn identity_covariance_recovered_at_large_n() {
        let m = make_block_model(6, 1, 1.0, 0.0).unwrap();
        let data = sample_mvn(&m, 10_000, 5).unwrap();
        let s = data.covariance();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (s[(i, j)] - want).abs() <= 0.1,
                    "S[{i},{j}] = {}",
                    s[(i, j)]
                );
            }
        }
    }

    #[test]
    fn block_correlations_match_sigma_at_large_n() {
        let m = make_block_model(8, 4, 1.0, 0.3).unwrap();
        let data = sample_mvn(&m, 100_000, 123).unwrap();
        let s = data.covariance();
        let sig = m.sigma();
        for i in 0..8 {
            for j in 0..8 {
                let corr = s[(i, j)] / (s[(i, i)] * s[(j, j)]).sqrt();
                let want = sig[(i, j)] / (sig[(i, i)] * sig[(j, j)]).sqrt();
                assert!(
                    (corr - want).abs() <= 0.05,
                    "corr[{i},{j}] = {corr}, want {want}"
                );
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        cfg.p = 41;
        assert!(cfg.validate().is_err());
        cfg.p = 40;
        cfg.q = 0.0;
        assert!(cfg.validate().is_err());
    }
}
