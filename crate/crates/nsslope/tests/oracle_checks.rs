//! Oracle cross-checks beyond the acceptance criteria: the solver against
//! the ADMM reference on small instances, and the prox against an
//! assumption-free grid search in two dimensions.

mod common;

use ndarray::Array1;
use rand::Rng;

use nsslope::{
    primal_objective, prox_sorted_l1, solve_slope, LambdaSequence, SolveOptions, SubproblemSpec,
};

#[test]
fn solver_matches_admm_oracle_on_small_instances() {
    let mut rng = common::rng(42);
    let (n, d) = (20, 5);
    for case in 0..30 {
        let a = common::random_matrix(&mut rng, n, d);
        let b = common::random_vector(&mut rng, n, 2.0);
        let lam_vals = common::random_descending_lambda(&mut rng, d);
        let lam = LambdaSequence::new(lam_vals.clone()).unwrap();
        let spec = SubproblemSpec::new(a.view(), b.view(), 1.0, &lam).unwrap();
        let sol = solve_slope(&spec, &SolveOptions::default()).unwrap();
        assert!(sol.converged);

        let oracle = common::admm_slope_oracle(&a, &b, &lam_vals, 6000);
        assert!(common::kkt_violation(&a, &b, &lam_vals, &oracle.beta) <= 1e-7);

        let obj = primal_objective(&spec, sol.beta.view());
        assert!(
            (obj - oracle.objective).abs() <= 1e-6,
            "case {case}: objective gap {}",
            (obj - oracle.objective).abs()
        );
        for (g, w) in sol.beta.iter().zip(oracle.beta.iter()) {
            assert!(
                (g - w).abs() <= 1e-4,
                "case {case}: coefficient mismatch {g} vs {w}"
            );
        }
    }
}

#[test]
fn prox_matches_grid_search_in_two_dimensions() {
    let mut rng = common::rng(43);
    for case in 0..30 {
        let z = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let mut lam = [rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0)];
        lam.sort_by(|a, b| b.partial_cmp(a).unwrap());

        let got = prox_sorted_l1(
            Array1::from(z.to_vec()).view(),
            &LambdaSequence::new(lam.to_vec()).unwrap(),
        )
        .unwrap();
        let want = common::grid_prox_oracle_2d(&z, &lam);
        for (g, w) in got.iter().zip(want.iter()) {
            assert!(
                (g - w).abs() <= 1e-6,
                "case {case}: {g} vs {w} (z = {z:?}, lam = {lam:?})"
            );
        }
    }
}
