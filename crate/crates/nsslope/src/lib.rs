//! Sparse inverse-covariance (Gaussian MRF precision matrix) estimation by
//! neighborhood selection with sorted-L1 (SLOPE) penalties.
//!
//! Each variable is regressed on all others under a sorted-L1 penalty whose
//! weight schedule targets a false discovery rate q for edge selection; the
//! per-column solutions are stitched into a precision matrix through the
//! identities theta_ii = 1/sigma_i^2 and theta_{-i,i} = -theta_ii beta^i,
//! and the result is symmetrized. A plain-L1 baseline with a familywise
//! threshold, synthetic ground-truth generators and recovery metrics round
//! out the experiment harness.

pub mod csv_io;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod lambda_seq;
pub mod linalg;
pub mod metrics;
pub mod normal;
pub mod slope_solver;
pub mod sorted_l1;
pub mod synth;

pub use dataset::{center_columns, Dataset};
pub use error::{Error, Result};
pub use estimator::{
    fit_mb_lasso, fit_nsslope, symmetrize, update_diagonal, FitConfig, PrecisionEstimate,
    SweepMode,
};
pub use lambda_seq::{adjusted_sequence, bh_sequence};
pub use metrics::{aggregate, edge_metrics, mse_metrics, AggregateReport, MetricsReport, Summary};
pub use normal::{normal_cdf, normal_quantile};
pub use slope_solver::{
    duality_gap, primal_objective, solve_slope, SolveOptions, SubproblemSolution, SubproblemSpec,
};
pub use sorted_l1::{prox_sorted_l1, sorted_l1_norm, LambdaSequence};
pub use synth::{
    make_block_model, make_hub_model, sample_mvn, ExperimentConfig, GroundTruthModel, Structure,
};
