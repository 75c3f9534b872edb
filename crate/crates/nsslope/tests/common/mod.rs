//! Shared oracles for the integration suites. Everything here recomputes
//! results through routes independent of the library's solver path: a
//! brute-force active-set QP for the prox, a grid-refinement search for
//! two-dimensional instances, an ADMM solve plus a from-scratch KKT
//! certificate for the regression sub-problem.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------
// small dense solver (partial pivoting), used by the QP and ADMM oracles
// ---------------------------------------------------------------------

/// Solve `m x = rhs` in place; None when a pivot degenerates.
pub fn solve_linear(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in (col + 1)..n {
            let f = m[r][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for c in (r + 1)..n {
            acc -= m[r][c] * x[c];
        }
        x[r] = acc / m[r][r];
    }
    Some(x)
}

/// Invert a matrix column by column with the elimination solver.
pub fn invert_matrix(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
    let mut inv = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut rhs = vec![0.0; n];
        rhs[j] = 1.0;
        let col = solve_linear(rows.clone(), rhs).expect("oracle matrix must be invertible");
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    inv
}

// ---------------------------------------------------------------------
// sorted-L1 evaluation, reimplemented here so oracle objectives do not
// depend on library code
// ---------------------------------------------------------------------

pub fn sl1_value(beta: &[f64], lam: &[f64]) -> f64 {
    let mut mags: Vec<f64> = beta.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    mags.iter().zip(lam).map(|(m, l)| m * l).sum()
}

pub fn prox_objective(x: &[f64], z: &[f64], lam: &[f64]) -> f64 {
    let quad: f64 = x.iter().zip(z).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum();
    quad + sl1_value(x, lam)
}

// ---------------------------------------------------------------------
// brute-force QP oracle for the prox
// ---------------------------------------------------------------------

/// Exact prox of the sorted-L1 norm by enumerating the 2^d active sets of
/// the reduced isotonic QP: project w = sorted|z| - lam onto the
/// nonincreasing nonnegative cone by solving every KKT equality system and
/// keeping the feasible candidate with least objective.
pub fn qp_prox_oracle(z: &[f64], lam: &[f64]) -> Vec<f64> {
    let d = z.len();
    assert!(d <= 16, "active-set enumeration blows up past d = 16");
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| z[b].abs().partial_cmp(&z[a].abs()).unwrap());
    let w: Vec<f64> = order
        .iter()
        .enumerate()
        .map(|(i, &idx)| z[idx].abs() - lam[i])
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1u32 << d) {
        let m = mask.count_ones() as usize;
        let size = d + m;
        // [ I  G' ] [y ]   [w]
        // [ G  0  ] [nu] = [0]   with G the active constraint gradients
        let mut mat = vec![vec![0.0; size]; size];
        let mut rhs = vec![0.0; size];
        for i in 0..d {
            mat[i][i] = 1.0;
            rhs[i] = w[i];
        }
        let mut row = d;
        for k in 0..d {
            if mask & (1 << k) == 0 {
                continue;
            }
            mat[k][row] = 1.0;
            mat[row][k] = 1.0;
            if k + 1 < d {
                mat[k + 1][row] = -1.0;
                mat[row][k + 1] = -1.0;
            }
            row += 1;
        }
        let Some(sol) = solve_linear(mat, rhs) else {
            continue;
        };
        let y = &sol[..d];
        let feasible = (0..d).all(|k| {
            let slack = if k + 1 < d { y[k] - y[k + 1] } else { y[k] };
            slack >= -1e-9
        });
        if !feasible {
            continue;
        }
        let obj: f64 = y.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().map_or(true, |(bo, _)| obj < *bo) {
            best = Some((obj, y.to_vec()));
        }
    }
    let (_, y) = best.expect("the all-active set is always feasible");

    let mut out = vec![0.0; d];
    for (i, &idx) in order.iter().enumerate() {
        let v = y[i].max(0.0);
        out[idx] = if z[idx] < 0.0 { -v } else { v };
    }
    out
}

/// Assumption-free prox oracle for d = 2: iterated dense grid refinement
/// over the full plane. Accuracy around 1e-8 per coordinate.
pub fn grid_prox_oracle_2d(z: &[f64; 2], lam: &[f64; 2]) -> [f64; 2] {
    let mut center = [0.0f64, 0.0];
    let mut half = z[0].abs().max(z[1].abs()) + lam[0] + 1.0;
    let grid = 40usize;
    let mut best = [0.0f64, 0.0];
    for _round in 0..12 {
        let mut best_obj = f64::INFINITY;
        for i in 0..=grid {
            for j in 0..=grid {
                let x = [
                    center[0] - half + 2.0 * half * i as f64 / grid as f64,
                    center[1] - half + 2.0 * half * j as f64 / grid as f64,
                ];
                let obj = prox_objective(&x, z, lam);
                if obj < best_obj {
                    best_obj = obj;
                    best = x;
                }
            }
        }
        center = best;
        half = 4.0 * half / grid as f64;
    }
    best
}

// ---------------------------------------------------------------------
// ADMM oracle for the regression sub-problem
// ---------------------------------------------------------------------

pub struct AdmmResult {
    pub beta: Array1<f64>,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// High-accuracy reference solve of
/// `0.5 ||b - A beta||^2 + sum_i lam_i |beta|_(i)` by ADMM with a fixed
/// penalty and a fixed iteration budget. The splitting and its fixed-point
/// iteration share nothing with the accelerated proximal gradient path
/// under test; the prox of the sorted-L1 term is the library routine, which
/// the suite verifies separately against the active-set QP oracle.
pub fn admm_slope_oracle(
    a: &Array2<f64>,
    b: &Array1<f64>,
    lam_eff: &[f64],
    iterations: usize,
) -> AdmmResult {
    use nsslope::{prox_sorted_l1, LambdaSequence};

    let d = a.ncols();
    let ata = a.t().dot(a);
    let rho = (0..d).map(|i| ata[(i, i)]).sum::<f64>() / d as f64;
    let mut m = ata.clone();
    for i in 0..d {
        m[(i, i)] += rho;
    }
    let m_inv = invert_matrix(&m);
    let atb = a.t().dot(b);

    let lam_over_rho =
        LambdaSequence::new(lam_eff.iter().map(|v| v / rho).collect()).expect("positive weights");

    let mut z = Array1::<f64>::zeros(d);
    let mut u = Array1::<f64>::zeros(d);
    let mut primal_residual = f64::INFINITY;
    let mut dual_residual = f64::INFINITY;
    for _ in 0..iterations {
        let rhs = &atb + &(&z - &u).mapv(|v| v * rho);
        let beta = m_inv.dot(&rhs);
        let w = &beta + &u;
        let z_new = prox_sorted_l1(w.view(), &lam_over_rho).expect("dims match");
        let dz = (&z_new - &z).mapv(|v| v.abs()).sum();
        let pr = (&beta - &z_new).mapv(|v| v.abs()).sum();
        z = z_new;
        u = &w - &z;
        primal_residual = pr;
        dual_residual = rho * dz;
    }
    let beta = z;
    let r = b - &a.dot(&beta);
    let objective = 0.5 * r.dot(&r) + sl1_value(beta.as_slice().unwrap(), lam_eff);
    AdmmResult {
        beta,
        objective,
        primal_residual,
        dual_residual,
    }
}

/// From-scratch optimality certificate for the sub-problem at `beta`:
/// with v = A'(b - A beta), checks (i) cumulative sums of sorted |v| never
/// exceed those of the weights, (ii) equality at the support size, and
/// (iii) sign agreement on the support. Returns the largest violation.
pub fn kkt_violation(a: &Array2<f64>, b: &Array1<f64>, lam_eff: &[f64], beta: &Array1<f64>) -> f64 {
    let r = b - &a.dot(beta);
    let v = a.t().dot(&r);
    let d = beta.len();

    let mut worst = 0.0f64;
    for i in 0..d {
        if beta[i] != 0.0 && v[i] * beta[i].signum() < 0.0 {
            worst = worst.max(v[i].abs());
        }
    }

    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let support = beta.iter().filter(|x| **x != 0.0).count();
    let mut cum_v = 0.0;
    let mut cum_l = 0.0;
    for k in 0..d {
        cum_v += mags[k];
        cum_l += lam_eff[k];
        worst = worst.max(cum_v - cum_l);
        if k + 1 == support {
            worst = worst.max((cum_v - cum_l).abs());
        }
    }
    worst
}

// ---------------------------------------------------------------------
// deterministic random instances
// ---------------------------------------------------------------------

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Array1<f64> {
    Array1::from_shape_fn(d, |_| rng.gen_range(-scale..scale))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.gen_range(-1.0..1.0))
}

pub fn random_descending_lambda(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..2.5)).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}
