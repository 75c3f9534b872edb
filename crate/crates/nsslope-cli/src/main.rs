//! Command line front end: simulate synthetic datasets, fit precision
//! matrices, evaluate against ground truth, run batched sweeps and inspect
//! weight sequences.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod manifest;
mod sidecar;

use commands::{EvalArgs, FitSpec, LambdaArgs, SimulateArgs};
use config::{Method, SweepSpec};
use nsslope::Structure;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StructureArg {
    Block,
    Hub,
}

impl From<StructureArg> for Structure {
    fn from(v: StructureArg) -> Self {
        match v {
            StructureArg::Block => Structure::Block,
            StructureArg::Hub => Structure::Hub,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "nsslope",
    version,
    about = "Sparse precision matrix estimation with sorted-L1 penalized neighborhood selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Args)]
struct SolverFlags {
    /// Outer-loop stopping threshold on the diagonal change
    #[arg(long, default_value_t = 1e-3)]
    outer_tol: f64,
    /// Duality-gap tolerance for each sub-problem solve
    #[arg(long, default_value_t = 1e-7)]
    gap_tol: f64,
    #[arg(long, default_value_t = 100)]
    max_sweeps: usize,
    #[arg(long, default_value_t = 20_000)]
    max_inner_iter: usize,
    /// Solve the sub-problems of each sweep in parallel (Jacobi updates)
    #[arg(long)]
    parallel: bool,
    /// Use the raw quantile weight sequence instead of the adjusted one
    #[arg(long)]
    bh_lambda: bool,
}

#[derive(Subcommand)]
enum Commands {
    /// Generate a synthetic dataset (X.csv) with its ground-truth sidecar (truth.json)
    Simulate {
        #[arg(long, value_enum)]
        structure: StructureArg,
        /// Number of variables
        #[arg(long)]
        p: usize,
        /// Number of samples
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        block_size: usize,
        /// Within-block association strength of the block structure
        #[arg(long, default_value_t = 0.3)]
        off_value: f64,
        /// Strength written into the hub covariance pattern
        #[arg(long, default_value_t = 0.2)]
        hub_value: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        q: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Write a header row with column names
        #[arg(long)]
        header: bool,
    },

    /// Fit a precision matrix from a sample-matrix CSV
    Fit {
        /// Input sample matrix (rows = samples, columns = variables)
        #[arg(long, required_unless_present = "from_manifest")]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Method::Nsslope)]
        method: Method,
        /// Target false discovery rate (nsslope)
        #[arg(long, default_value_t = 0.05)]
        q: f64,
        /// Familywise error level (mblasso)
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Input CSV has a header row
        #[arg(long)]
        header: bool,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Fail (exit 1) when the solver does not converge
        #[arg(long)]
        strict: bool,
        /// Re-run a recorded fit exactly as stored in its manifest
        #[arg(long, conflicts_with_all = ["input", "header", "strict"])]
        from_manifest: Option<PathBuf>,
    },

    /// Compare a fitted matrix against a truth sidecar
    Eval {
        #[arg(long)]
        theta: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// theta CSV has a header row
        #[arg(long)]
        header: bool,
        /// Entries above this magnitude count as discovered edges
        #[arg(long, default_value_t = 1e-10)]
        zero_tol: f64,
        /// Also write the JSON report to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Run a (method x n x repetition) grid and aggregate the metrics
    Sweep {
        /// Flat key=value config file; flags override its entries
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        structure: Option<StructureArg>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        block_size: Option<usize>,
        #[arg(long)]
        off_value: Option<f64>,
        #[arg(long)]
        hub_value: Option<f64>,
        /// Comma-separated sample sizes, e.g. 100,200,400
        #[arg(long)]
        n_grid: Option<String>,
        #[arg(long)]
        reps: Option<usize>,
        /// Comma-separated methods, e.g. nsslope,mblasso
        #[arg(long)]
        methods: Option<String>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker pool size (default: all cores; NSSLOPE_THREADS overrides)
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Re-run a recorded sweep exactly as stored in its manifest
        #[arg(long)]
        from_manifest: Option<PathBuf>,
    },

    /// Print a weight sequence as CSV
    Lambda {
        /// Sequence length (the sub-problem dimension, p - 1)
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0.05)]
        q: f64,
        /// Sample count; when given, the adjusted sequence is emitted
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Commands::Simulate {
            structure,
            p,
            n,
            block_size,
            off_value,
            hub_value,
            seed,
            q,
            alpha,
            out_dir,
            header,
        } => commands::run_simulate(&SimulateArgs {
            structure: structure.into(),
            p,
            n,
            block_size,
            off_value,
            hub_value,
            seed,
            q,
            alpha,
            out_dir,
            header,
        }),

        Commands::Fit {
            input,
            method,
            q,
            alpha,
            header,
            solver,
            out_dir,
            strict,
            from_manifest,
        } => {
            if let Some(path) = from_manifest {
                return commands::run_fit_from_manifest(&path);
            }
            commands::run_fit(&FitSpec {
                input: input.expect("clap enforces --input without --from-manifest"),
                method,
                q,
                alpha,
                header,
                outer_tol: solver.outer_tol,
                gap_tol: solver.gap_tol,
                max_sweeps: solver.max_sweeps,
                max_inner_iter: solver.max_inner_iter,
                parallel: solver.parallel,
                adjusted_lambda: !solver.bh_lambda,
                out_dir,
                strict,
            })
        }

        Commands::Eval {
            theta,
            truth,
            header,
            zero_tol,
            out,
        } => commands::run_eval(&EvalArgs {
            theta,
            truth,
            header,
            zero_tol,
            out,
        }),

        Commands::Sweep {
            config,
            structure,
            p,
            block_size,
            off_value,
            hub_value,
            n_grid,
            reps,
            methods,
            q,
            alpha,
            seed,
            threads,
            out_dir,
            from_manifest,
        } => {
            if let Some(path) = from_manifest {
                return commands::run_sweep_from_manifest(&path);
            }
            let mut spec = SweepSpec::default();
            if let Some(path) = &config {
                let map = config::parse_kv_file(path)?;
                spec.apply_map(&map)?;
            }
            if let Some(s) = structure {
                spec.structure = s.into();
            }
            if let Some(v) = p {
                spec.p = v;
            }
            if let Some(v) = block_size {
                spec.block_size = v;
            }
            if let Some(v) = off_value {
                spec.off_value = v;
            }
            if let Some(v) = hub_value {
                spec.hub_value = v;
            }
            if let Some(v) = &n_grid {
                spec.n_grid = v
                    .split(',')
                    .map(|t| t.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| anyhow::anyhow!("cannot parse --n-grid {v:?}"))?;
            }
            if let Some(v) = reps {
                spec.repetitions = v;
            }
            if let Some(v) = &methods {
                spec.methods = v
                    .split(',')
                    .map(Method::parse)
                    .collect::<anyhow::Result<_>>()?;
            }
            if let Some(v) = q {
                spec.q = v;
            }
            if let Some(v) = alpha {
                spec.alpha = v;
            }
            if let Some(v) = seed {
                spec.seed = v;
            }
            if let Some(v) = threads {
                spec.threads = Some(v);
            }
            if let Some(v) = out_dir {
                spec.out_dir = v;
            }
            commands::run_sweep(&spec)
        }

        Commands::Lambda { d, q, n, out } => commands::run_lambda(&LambdaArgs { d, q, n, out }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
