//! The outer estimation loop: one sorted-L1 penalized regression per
//! variable, diagonal and off-diagonal precision updates from the identities
//!
//!     theta_ii    = (S_ii - 2 b' S_{-i,i} + b' S_{-i,-i} b)^{-1}
//!     theta_{-i,i} = -theta_ii * b
//!
//! a diagonal-convergence check, and a final Frobenius projection onto the
//! symmetric matrices. The plain-L1 neighborhood-selection baseline reuses
//! the same machinery with a constant weight vector.
//!
//! Each sub-problem is solved on a design whose columns are rescaled to
//! unit Euclidean norm, and the coefficients are scaled back afterwards.
//! The quantile-based weight schedules are calibrated for unit-norm
//! predictors; without the rescaling the penalty is negligible against a
//! squared loss that grows with n, and the selection levels are meaningless.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::lambda_seq::{adjusted_sequence, bh_sequence};
use crate::normal::normal_quantile;
use crate::slope_solver::{design_lipschitz, solve_slope, SolveOptions, SubproblemSpec};
use crate::sorted_l1::LambdaSequence;

const RSS_FLOOR: f64 = 1e-15;

/// How the per-variable sub-problems are swept.
///
/// Sequential sweeps use the freshest diagonal estimates (Gauss-Seidel) and
/// are bitwise deterministic. Jacobi sweeps read all penalty scales from the
/// previous sweep, which makes the p sub-problems independent and lets them
/// run in parallel; results are still deterministic because writes go to
/// disjoint slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Sequential,
    Jacobi,
}

/// Estimator configuration.
#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Target false discovery rate for the weight schedule.
    pub q: f64,
    /// Outer-loop stopping threshold on the diagonal sup-norm change.
    pub outer_tol: f64,
    /// Duality-gap tolerance handed to the sub-problem solver.
    pub gap_tol: f64,
    pub max_sweeps: usize,
    pub mode: SweepMode,
    /// Use the inflated weight sequence rather than the raw quantile one.
    pub use_adjusted_lambda: bool,
    pub max_inner_iter: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            q: 0.05,
            outer_tol: 1e-3,
            gap_tol: 1e-7,
            max_sweeps: 100,
            mode: SweepMode::Sequential,
            use_adjusted_lambda: true,
            max_inner_iter: 20_000,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::ProbabilityOutOfRange(self.q));
        }
        if self.outer_tol <= 0.0 || self.gap_tol <= 0.0 {
            return Err(Error::InvalidConfig(
                "tolerances must be positive".into(),
            ));
        }
        if self.max_sweeps == 0 || self.max_inner_iter == 0 {
            return Err(Error::InvalidConfig(
                "iteration limits must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A fitted precision matrix.
#[derive(Debug, Clone)]
pub struct PrecisionEstimate {
    theta: Array2<f64>,
    theta_raw: Array2<f64>,
    betas: Vec<Array1<f64>>,
    sweep_count: usize,
    converged: bool,
    subproblems_converged: bool,
    diagonal_history: Vec<Vec<f64>>,
}

impl PrecisionEstimate {
    pub fn p(&self) -> usize {
        self.theta.nrows()
    }

    /// The symmetrized estimate.
    pub fn theta(&self) -> ArrayView2<'_, f64> {
        self.theta.view()
    }

    /// Column-form estimate before symmetrization; entry (j, i) equals
    /// -theta_ii * beta^i_j exactly.
    pub fn theta_raw(&self) -> ArrayView2<'_, f64> {
        self.theta_raw.view()
    }

    /// Per-column regression coefficients, original scale, length p-1 each.
    pub fn betas(&self) -> &[Array1<f64>] {
        &self.betas
    }

    pub fn sweep_count(&self) -> usize {
        self.sweep_count
    }

    /// False when the sweep limit ran out before the diagonal settled.
    pub fn converged(&self) -> bool {
        self.converged
    }

    /// False when any inner solve hit its iteration cap.
    pub fn subproblems_converged(&self) -> bool {
        self.subproblems_converged
    }

    /// Diagonal after each sweep, in sweep order.
    pub fn diagonal_history(&self) -> &[Vec<f64>] {
        &self.diagonal_history
    }

    /// Off-diagonal support of the symmetrized estimate: (i, j, value) with
    /// j > i and |value| > zero_tol.
    pub fn support_edges(&self, zero_tol: f64) -> Vec<(usize, usize, f64)> {
        let p = self.p();
        let mut out = Vec::new();
        for i in 0..p {
            for j in (i + 1)..p {
                let v = self.theta[(i, j)];
                if v.abs() > zero_tol {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

/// Frobenius projection onto symmetric matrices: (M + M')/2, computed once
/// per unordered pair so the result is exactly symmetric.
pub fn symmetrize(theta: &Array2<f64>) -> Result<Array2<f64>> {
    let p = theta.nrows();
    if theta.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "symmetrize needs a square matrix, got {}x{}",
            theta.nrows(),
            theta.ncols()
        )));
    }
    let mut out = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        out[(i, i)] = theta[(i, i)];
        for j in (i + 1)..p {
            let v = 0.5 * (theta[(i, j)] + theta[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Reciprocal of the sample-covariance quadratic form
/// `S_ii - 2 b' S_{-i,i} + b' S_{-i,-i} b`, which equals n/RSS for the
/// column-i residual. Errors when the form is numerically zero.
pub fn update_diagonal(s: ArrayView2<'_, f64>, beta: ArrayView1<'_, f64>, i: usize) -> Result<f64> {
    let p = s.nrows();
    if beta.len() != p - 1 || i >= p {
        return Err(Error::DimensionMismatch(format!(
            "beta has length {}, need {} (p = {p}, column {i})",
            beta.len(),
            p - 1
        )));
    }
    let mut quad = s[(i, i)];
    for (k, &bk) in beta.iter().enumerate() {
        let j = if k < i { k } else { k + 1 };
        quad -= 2.0 * bk * s[(j, i)];
        let mut row = 0.0;
        for (l, &bl) in beta.iter().enumerate() {
            let m = if l < i { l } else { l + 1 };
            row += s[(j, m)] * bl;
        }
        quad += bk * row;
    }
    if !(quad > RSS_FLOOR) {
        return Err(Error::SingularResidual { column: i });
    }
    Ok(1.0 / quad)
}

/// Fit with the FDR-calibrated sorted-L1 weight schedule.
pub fn fit_nsslope(data: &Dataset, config: &FitConfig) -> Result<PrecisionEstimate> {
    config.validate()?;
    let d = data.p() - 1;
    let lambda = if config.use_adjusted_lambda {
        adjusted_sequence(d, config.q, data.n())?
    } else {
        bh_sequence(d, config.q)?
    };
    fit_with_lambda(data, &lambda, config)
}

/// Plain-L1 neighborhood-selection baseline: every weight equals the
/// familywise threshold `Phi^{-1}(1 - alpha / 2p)`.
pub fn fit_mb_lasso(data: &Dataset, alpha: f64, config: &FitConfig) -> Result<PrecisionEstimate> {
    config.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::ProbabilityOutOfRange(alpha));
    }
    let level = normal_quantile(1.0 - alpha / (2.0 * data.p() as f64))?;
    let lambda = LambdaSequence::uniform(data.p() - 1, level)?;
    fit_with_lambda(data, &lambda, config)
}

struct ColumnProblem {
    design: Array2<f64>,
    norms: Vec<f64>,
    response: Array1<f64>,
    lipschitz: f64,
}

fn build_column_problem(x: ArrayView2<'_, f64>, i: usize) -> ColumnProblem {
    let (n, p) = (x.nrows(), x.ncols());
    let mut design = Array2::<f64>::zeros((n, p - 1));
    let mut norms = Vec::with_capacity(p - 1);
    let mut k = 0;
    for j in 0..p {
        if j == i {
            continue;
        }
        let col = x.column(j);
        let norm = col.dot(&col).sqrt();
        let scale = if norm > 1e-150 { norm } else { 1.0 };
        design.column_mut(k).assign(&col.mapv(|v| v / scale));
        norms.push(scale);
        k += 1;
    }
    let lipschitz = design_lipschitz(design.view());
    ColumnProblem {
        design,
        norms,
        response: x.column(i).to_owned(),
        lipschitz,
    }
}

// Solves the column-i sub-problem at penalty scale sigma from the given
// warm start (in the unit-norm design scale). Returns the scaled solution,
// the original-scale coefficients, the new diagonal and the solver flag.
fn solve_column(
    problem: &ColumnProblem,
    s: ArrayView2<'_, f64>,
    i: usize,
    sigma: f64,
    lambda: &LambdaSequence,
    warm: &Array1<f64>,
    config: &FitConfig,
) -> Result<(Array1<f64>, Array1<f64>, f64, bool)> {
    let spec = SubproblemSpec::new(
        problem.design.view(),
        problem.response.view(),
        sigma,
        lambda,
    )?;
    let opts = SolveOptions {
        gap_tol: config.gap_tol,
        max_iter: config.max_inner_iter,
        warm_start: Some(warm.clone()),
        lipschitz: Some(problem.lipschitz),
    };
    let sol = solve_slope(&spec, &opts)?;
    let beta = Array1::from_iter(
        sol.beta
            .iter()
            .zip(problem.norms.iter())
            .map(|(b, norm)| b / norm),
    );
    let diag = update_diagonal(s, beta.view(), i)?;
    Ok((sol.beta, beta, diag, sol.converged))
}

fn fit_with_lambda(
    data: &Dataset,
    lambda: &LambdaSequence,
    config: &FitConfig,
) -> Result<PrecisionEstimate> {
    let p = data.p();
    let x = data.x();
    let s = data.covariance();

    // Marginal precision is the beta = 0 fixed point of the diagonal update.
    let mut diag = Vec::with_capacity(p);
    for i in 0..p {
        if !(s[(i, i)] > RSS_FLOOR) {
            return Err(Error::SingularResidual { column: i });
        }
        diag.push(1.0 / s[(i, i)]);
    }

    let problems: Vec<ColumnProblem> = match config.mode {
        SweepMode::Sequential => (0..p).map(|i| build_column_problem(x, i)).collect(),
        SweepMode::Jacobi => (0..p)
            .into_par_iter()
            .map(|i| build_column_problem(x, i))
            .collect(),
    };

    let mut betas_scaled: Vec<Array1<f64>> = vec![Array1::zeros(p - 1); p];
    let mut betas: Vec<Array1<f64>> = vec![Array1::zeros(p - 1); p];
    let mut history: Vec<Vec<f64>> = Vec::new();
    let mut subproblems_converged = true;
    let mut converged = false;
    let mut sweep_count = 0;

    for sweep in 1..=config.max_sweeps {
        sweep_count = sweep;
        let diag_prev = diag.clone();
        match config.mode {
            SweepMode::Sequential => {
                for i in 0..p {
                    let sigma = 1.0 / diag[i].sqrt();
                    let (scaled, beta, new_diag, ok) = solve_column(
                        &problems[i],
                        s,
                        i,
                        sigma,
                        lambda,
                        &betas_scaled[i],
                        config,
                    )?;
                    betas_scaled[i] = scaled;
                    betas[i] = beta;
                    diag[i] = new_diag;
                    subproblems_converged &= ok;
                }
            }
            SweepMode::Jacobi => {
                let results: Vec<Result<(Array1<f64>, Array1<f64>, f64, bool)>> = (0..p)
                    .into_par_iter()
                    .map(|i| {
                        let sigma = 1.0 / diag_prev[i].sqrt();
                        solve_column(
                            &problems[i],
                            s,
                            i,
                            sigma,
                            lambda,
                            &betas_scaled[i],
                            config,
                        )
                    })
                    .collect();
                for (i, r) in results.into_iter().enumerate() {
                    let (scaled, beta, new_diag, ok) = r?;
                    betas_scaled[i] = scaled;
                    betas[i] = beta;
                    diag[i] = new_diag;
                    subproblems_converged &= ok;
                }
            }
        }
        history.push(diag.clone());

        let delta = diag
            .iter()
            .zip(diag_prev.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if delta < config.outer_tol {
            converged = true;
            break;
        }
    }

    // Column form: theta_{-i,i} = -theta_ii beta^i, coupling exact.
    let mut theta_raw = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        theta_raw[(i, i)] = diag[i];
        for (k, &b) in betas[i].iter().enumerate() {
            let j = if k < i { k } else { k + 1 };
            theta_raw[(j, i)] = -diag[i] * b;
        }
    }
    let theta = symmetrize(&theta_raw)?;

    Ok(PrecisionEstimate {
        theta,
        theta_raw,
        betas,
        sweep_count,
        converged,
        subproblems_converged,
        diagonal_history: history,
    })
}
