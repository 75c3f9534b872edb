//! Implementations of the five subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use nsslope::csv_io::{format_float, read_matrix_csv, write_matrix_csv};
use nsslope::metrics::report_from_matrix;
use nsslope::{
    adjusted_sequence, aggregate, bh_sequence, center_columns, edge_metrics, fit_mb_lasso,
    fit_nsslope, sample_mvn, AggregateReport, Dataset, ExperimentConfig, FitConfig,
    GroundTruthModel, MetricsReport, PrecisionEstimate, Structure, SweepMode,
};

use crate::config::{Method, SweepSpec};
use crate::manifest::RunManifest;
use crate::sidecar::{matrix_to_rows, rows_to_matrix, TruthSidecar};

fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("NSSLOPE_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0) // rayon reads 0 as "use all cores"
}

fn column_names(prefix: &str, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i}")).collect()
}

// ---------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------

pub struct SimulateArgs {
    pub structure: Structure,
    pub p: usize,
    pub n: usize,
    pub block_size: usize,
    pub off_value: f64,
    pub hub_value: f64,
    pub seed: u64,
    pub q: f64,
    pub alpha: f64,
    pub out_dir: PathBuf,
    pub header: bool,
}

pub fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let config = ExperimentConfig {
        structure: args.structure,
        p: args.p,
        n: args.n,
        block_size: args.block_size,
        off_diag_value: args.off_value,
        hub_value: args.hub_value,
        repetitions: 1,
        seed: args.seed,
        q: args.q,
        alpha: args.alpha,
    };
    let model = config.build_model()?;
    let data = sample_mvn(&model, args.n, args.seed)?;

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let x_path = args.out_dir.join("X.csv");
    let truth_path = args.out_dir.join("truth.json");

    let header = args
        .header
        .then(|| column_names("x", args.p));
    write_matrix_csv(&x_path, &data.x().to_owned(), header.as_deref())?;

    TruthSidecar {
        config,
        edges: model.edge_set().iter().copied().collect(),
        theta: matrix_to_rows(model.theta()),
    }
    .save(&truth_path)?;

    println!(
        "wrote {} ({}x{}) and {} ({} true edges)",
        x_path.display(),
        args.n,
        args.p,
        truth_path.display(),
        model.edge_set().len()
    );
    Ok(())
}

// ---------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct FitSpec {
    pub input: PathBuf,
    pub method: Method,
    pub q: f64,
    pub alpha: f64,
    pub header: bool,
    pub outer_tol: f64,
    pub gap_tol: f64,
    pub max_sweeps: usize,
    pub max_inner_iter: usize,
    pub parallel: bool,
    pub adjusted_lambda: bool,
    pub out_dir: PathBuf,
    pub strict: bool,
}

impl FitSpec {
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("input".into(), self.input.display().to_string());
        m.insert("method".into(), self.method.name().into());
        m.insert("q".into(), self.q.to_string());
        m.insert("alpha".into(), self.alpha.to_string());
        m.insert("header".into(), self.header.to_string());
        m.insert("outer_tol".into(), self.outer_tol.to_string());
        m.insert("gap_tol".into(), self.gap_tol.to_string());
        m.insert("max_sweeps".into(), self.max_sweeps.to_string());
        m.insert("max_inner_iter".into(), self.max_inner_iter.to_string());
        m.insert("parallel".into(), self.parallel.to_string());
        m.insert("adjusted_lambda".into(), self.adjusted_lambda.to_string());
        m.insert("out_dir".into(), self.out_dir.display().to_string());
        m.insert("strict".into(), self.strict.to_string());
        m
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| -> Result<&String> {
            map.get(k)
                .ok_or_else(|| anyhow::anyhow!("manifest config misses key {k:?}"))
        };
        Ok(Self {
            input: PathBuf::from(get("input")?),
            method: Method::parse(get("method")?)?,
            q: get("q")?.parse()?,
            alpha: get("alpha")?.parse()?,
            header: get("header")?.parse()?,
            outer_tol: get("outer_tol")?.parse()?,
            gap_tol: get("gap_tol")?.parse()?,
            max_sweeps: get("max_sweeps")?.parse()?,
            max_inner_iter: get("max_inner_iter")?.parse()?,
            parallel: get("parallel")?.parse()?,
            adjusted_lambda: get("adjusted_lambda")?.parse()?,
            out_dir: PathBuf::from(get("out_dir")?),
            strict: get("strict")?.parse()?,
        })
    }

    fn fit_config(&self) -> FitConfig {
        FitConfig {
            q: self.q,
            outer_tol: self.outer_tol,
            gap_tol: self.gap_tol,
            max_sweeps: self.max_sweeps,
            mode: if self.parallel {
                SweepMode::Jacobi
            } else {
                SweepMode::Sequential
            },
            use_adjusted_lambda: self.adjusted_lambda,
            max_inner_iter: self.max_inner_iter,
        }
    }
}

fn fit_dataset(data: &Dataset, method: Method, spec: &FitSpec) -> Result<PrecisionEstimate> {
    let config = spec.fit_config();
    let est = match method {
        Method::Nsslope => fit_nsslope(data, &config)?,
        Method::Mblasso => fit_mb_lasso(data, spec.alpha, &config)?,
    };
    Ok(est)
}

pub fn run_fit(spec: &FitSpec) -> Result<()> {
    let started = Instant::now();
    let raw = read_matrix_csv(&spec.input, spec.header)?;
    let data = center_columns(raw)?;
    let read_ms = started.elapsed().as_millis();

    let fit_start = Instant::now();
    let est = fit_dataset(&data, spec.method, spec)?;
    let fit_ms = fit_start.elapsed().as_millis();

    fs::create_dir_all(&spec.out_dir)
        .with_context(|| format!("cannot create {}", spec.out_dir.display()))?;
    let theta_path = spec.out_dir.join("theta.csv");
    let edges_path = spec.out_dir.join("edges.csv");
    let manifest_path = spec.out_dir.join("manifest.json");

    write_matrix_csv(&theta_path, &est.theta().to_owned(), None)?;

    let mut edges_text = String::from("i,j,value\n");
    for (i, j, v) in est.support_edges(0.0) {
        edges_text.push_str(&format!("{i},{j},{}\n", format_float(v)));
    }
    fs::write(&edges_path, edges_text)?;

    let mut manifest = RunManifest::new("fit", spec.to_map());
    manifest.outputs = vec![
        theta_path.display().to_string(),
        edges_path.display().to_string(),
    ];
    manifest.timings_ms.insert("read".into(), read_ms);
    manifest.timings_ms.insert("fit".into(), fit_ms);
    manifest.solver_converged = est.converged() && est.subproblems_converged();
    if !est.converged() {
        manifest
            .notes
            .push(format!("outer loop hit max_sweeps = {}", spec.max_sweeps));
    }
    if !est.subproblems_converged() {
        manifest
            .notes
            .push("at least one sub-problem hit max_inner_iter".into());
    }
    manifest.save(&manifest_path)?;

    println!(
        "fit {} with {}: {} sweeps, converged = {}, wrote {} and {}",
        spec.input.display(),
        spec.method.name(),
        est.sweep_count(),
        est.converged(),
        theta_path.display(),
        edges_path.display()
    );

    if spec.strict && !manifest.solver_converged {
        bail!("solver did not converge and --strict was given");
    }
    Ok(())
}

pub fn run_fit_from_manifest(path: &Path) -> Result<()> {
    let manifest = RunManifest::load(path)?;
    if manifest.command != "fit" {
        bail!(
            "manifest {} records a {:?} run, not a fit",
            path.display(),
            manifest.command
        );
    }
    run_fit(&FitSpec::from_map(&manifest.config)?)
}

// ---------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------

pub struct EvalArgs {
    pub theta: PathBuf,
    pub truth: PathBuf,
    pub header: bool,
    pub zero_tol: f64,
    pub out: Option<PathBuf>,
}

pub fn run_eval(args: &EvalArgs) -> Result<()> {
    let theta = read_matrix_csv(&args.theta, args.header)?;
    let sidecar = TruthSidecar::load(&args.truth)?;
    let true_theta = rows_to_matrix(&sidecar.theta)?;
    let report = report_from_matrix(
        theta.view(),
        true_theta.view(),
        &sidecar.edge_set(),
        args.zero_tol,
    )?;
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    if let Some(out) = &args.out {
        fs::write(out, json + "\n")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct CellKey {
    method: &'static str,
    n: usize,
    repetition: usize,
    seed: u64,
}

#[derive(Serialize)]
struct AggregateCell {
    method: &'static str,
    n: usize,
    aggregate: AggregateReport,
}

#[derive(Serialize)]
struct AggregateFile {
    cells: Vec<AggregateCell>,
}

fn sweep_model(spec: &SweepSpec) -> Result<GroundTruthModel> {
    let config = ExperimentConfig {
        structure: spec.structure,
        p: spec.p,
        n: spec.n_grid.iter().copied().max().unwrap_or(2),
        block_size: spec.block_size,
        off_diag_value: spec.off_value,
        hub_value: spec.hub_value,
        repetitions: spec.repetitions,
        seed: spec.seed,
        q: spec.q,
        alpha: spec.alpha,
    };
    Ok(config.build_model()?)
}

fn run_cell(
    spec: &SweepSpec,
    model: &GroundTruthModel,
    method: Method,
    n: usize,
    repetition: usize,
) -> Result<(MetricsReport, bool)> {
    let seed = spec.seed + repetition as u64;
    let data = sample_mvn(model, n, seed)?;
    let config = FitConfig {
        q: spec.q,
        outer_tol: spec.outer_tol,
        gap_tol: spec.gap_tol,
        max_sweeps: spec.max_sweeps,
        mode: SweepMode::Sequential,
        use_adjusted_lambda: spec.adjusted_lambda,
        max_inner_iter: spec.max_inner_iter,
    };
    let est = match method {
        Method::Nsslope => fit_nsslope(&data, &config)?,
        Method::Mblasso => fit_mb_lasso(&data, spec.alpha, &config)?,
    };
    let report = edge_metrics(&est, model, spec.zero_tol)?;
    Ok((report, est.converged() && est.subproblems_converged()))
}

pub fn run_sweep(spec: &SweepSpec) -> Result<()> {
    if spec.n_grid.is_empty() || spec.methods.is_empty() || spec.repetitions == 0 {
        bail!("sweep grid is empty (check n_grid, methods, repetitions)");
    }
    let started = Instant::now();
    let model = sweep_model(spec)?;

    let cells: Vec<CellKey> = spec
        .methods
        .iter()
        .flat_map(|m| {
            let name = m.name();
            spec.n_grid.iter().flat_map(move |&n| {
                (0..spec.repetitions).map(move |repetition| CellKey {
                    method: name,
                    n,
                    repetition,
                    seed: 0, // filled below
                })
            })
        })
        .map(|mut c| {
            c.seed = spec.seed + c.repetition as u64;
            c
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_threads(spec.threads))
        .build()
        .context("cannot build worker pool")?;
    let results: Vec<(CellKey, Result<(MetricsReport, bool)>)> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let method = Method::parse(cell.method).expect("cell keys carry valid names");
                let res = run_cell(spec, &model, method, cell.n, cell.repetition);
                (cell.clone(), res)
            })
            .collect()
    });

    fs::create_dir_all(&spec.out_dir)
        .with_context(|| format!("cannot create {}", spec.out_dir.display()))?;
    let metrics_path = spec.out_dir.join("metrics.csv");
    let aggregate_path = spec.out_dir.join("aggregate.json");
    let manifest_path = spec.out_dir.join("manifest.json");

    let mut manifest = RunManifest::new("sweep", spec.to_map());
    manifest.seeds = (0..spec.repetitions as u64).map(|r| spec.seed + r).collect();

    // one CSV row per successful cell, in a fixed order
    let mut rows: Vec<(CellKey, MetricsReport, bool)> = Vec::new();
    for (key, res) in results {
        match res {
            Ok((report, converged)) => rows.push((key, report, converged)),
            Err(err) => {
                manifest.notes.push(format!(
                    "cell method={} n={} repetition={} failed: {err}",
                    key.method, key.n, key.repetition
                ));
                manifest.solver_converged = false;
            }
        }
    }
    rows.sort_by(|a, b| {
        (a.0.method, a.0.n, a.0.repetition).cmp(&(b.0.method, b.0.n, b.0.repetition))
    });

    let mut csv = String::from(
        "method,n,repetition,seed,fdr,power,mse_diag,mse_offdiag,\
         true_positives,false_positives,total_rejections,true_edge_count\n",
    );
    for (key, r, converged) in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            key.method,
            key.n,
            key.repetition,
            key.seed,
            format_float(r.fdr),
            format_float(r.power),
            format_float(r.mse_diag),
            format_float(r.mse_offdiag),
            r.true_positives,
            r.false_positives,
            r.total_rejections,
            r.true_edge_count
        ));
        if !converged {
            manifest.notes.push(format!(
                "cell method={} n={} repetition={} did not fully converge",
                key.method, key.n, key.repetition
            ));
            manifest.solver_converged = false;
        }
    }
    fs::write(&metrics_path, csv)?;

    let mut agg_cells = Vec::new();
    for m in &spec.methods {
        for &n in &spec.n_grid {
            let reports: Vec<MetricsReport> = rows
                .iter()
                .filter(|(k, _, _)| k.method == m.name() && k.n == n)
                .map(|(_, r, _)| r.clone())
                .collect();
            if reports.is_empty() {
                continue;
            }
            agg_cells.push(AggregateCell {
                method: m.name(),
                n,
                aggregate: aggregate(&reports)?,
            });
        }
    }
    fs::write(
        &aggregate_path,
        serde_json::to_string_pretty(&AggregateFile { cells: agg_cells })? + "\n",
    )?;

    manifest.outputs = vec![
        metrics_path.display().to_string(),
        aggregate_path.display().to_string(),
    ];
    manifest
        .timings_ms
        .insert("total".into(), started.elapsed().as_millis());
    manifest.save(&manifest_path)?;

    println!(
        "sweep finished: {} cells, {} rows written to {} ({} ms)",
        cells.len(),
        rows.len(),
        metrics_path.display(),
        started.elapsed().as_millis()
    );
    Ok(())
}

pub fn run_sweep_from_manifest(path: &Path) -> Result<()> {
    let manifest = RunManifest::load(path)?;
    if manifest.command != "sweep" {
        bail!(
            "manifest {} records a {:?} run, not a sweep",
            path.display(),
            manifest.command
        );
    }
    run_sweep(&SweepSpec::from_map(&manifest.config)?)
}

// ---------------------------------------------------------------------
// lambda
// ---------------------------------------------------------------------

pub struct LambdaArgs {
    pub d: usize,
    pub q: f64,
    pub n: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn run_lambda(args: &LambdaArgs) -> Result<()> {
    let seq = match args.n {
        Some(n) => adjusted_sequence(args.d, args.q, n)?,
        None => bh_sequence(args.d, args.q)?,
    };
    let mut text = String::from("index,lambda\n");
    for (i, v) in seq.values().iter().enumerate() {
        text.push_str(&format!("{},{}\n", i + 1, format_float(*v)));
    }
    match &args.out {
        Some(path) => fs::write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}
