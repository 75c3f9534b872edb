//! Flat key=value configuration files and the resolved sweep description.
//! Precedence is defaults < config file < command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use nsslope::Structure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Nsslope,
    Mblasso,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Nsslope => "nsslope",
            Method::Mblasso => "mblasso",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "nsslope" => Ok(Method::Nsslope),
            "mblasso" => Ok(Method::Mblasso),
            other => bail!("unknown method {other:?} (expected nsslope or mblasso)"),
        }
    }
}

pub fn parse_structure(s: &str) -> Result<Structure> {
    match s.trim() {
        "block" => Ok(Structure::Block),
        "hub" => Ok(Structure::Hub),
        other => bail!("unknown structure {other:?} (expected block or hub)"),
    }
}

pub fn structure_name(s: Structure) -> &'static str {
    match s {
        Structure::Block => "block",
        Structure::Hub => "hub",
    }
}

/// Read a `key = value` file; '#' starts a comment, blank lines are skipped.
pub fn parse_kv_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), idx + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Everything one sweep needs, fully resolved.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub structure: Structure,
    pub p: usize,
    pub block_size: usize,
    pub off_value: f64,
    pub hub_value: f64,
    pub n_grid: Vec<usize>,
    pub repetitions: usize,
    pub methods: Vec<Method>,
    pub q: f64,
    pub alpha: f64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out_dir: PathBuf,
    pub outer_tol: f64,
    pub gap_tol: f64,
    pub max_sweeps: usize,
    pub max_inner_iter: usize,
    pub adjusted_lambda: bool,
    pub zero_tol: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            structure: Structure::Block,
            p: 40,
            block_size: 4,
            off_value: 0.3,
            hub_value: 0.2,
            n_grid: vec![100, 200, 400],
            repetitions: 25,
            methods: vec![Method::Nsslope, Method::Mblasso],
            q: 0.05,
            alpha: 0.05,
            seed: 0,
            threads: None,
            out_dir: PathBuf::from("."),
            outer_tol: 1e-3,
            gap_tol: 1e-7,
            max_sweeps: 100,
            max_inner_iter: 20_000,
            adjusted_lambda: true,
            zero_tol: 1e-10,
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| anyhow!("cannot parse {what} entry {t:?}"))
        })
        .collect()
}

impl SweepSpec {
    /// Overlay values from a parsed key=value map.
    pub fn apply_map(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in map {
            match k.as_str() {
                "structure" => self.structure = parse_structure(v)?,
                "p" => self.p = v.parse().context("p")?,
                "block_size" => self.block_size = v.parse().context("block_size")?,
                "off_value" => self.off_value = v.parse().context("off_value")?,
                "hub_value" => self.hub_value = v.parse().context("hub_value")?,
                "n_grid" => self.n_grid = parse_list(v, "n_grid")?,
                "repetitions" => self.repetitions = v.parse().context("repetitions")?,
                "methods" => {
                    self.methods = v
                        .split(',')
                        .map(Method::parse)
                        .collect::<Result<Vec<_>>>()?
                }
                "q" => self.q = v.parse().context("q")?,
                "alpha" => self.alpha = v.parse().context("alpha")?,
                "seed" => self.seed = v.parse().context("seed")?,
                "threads" => self.threads = Some(v.parse().context("threads")?),
                "out_dir" => self.out_dir = PathBuf::from(v),
                "outer_tol" => self.outer_tol = v.parse().context("outer_tol")?,
                "gap_tol" => self.gap_tol = v.parse().context("gap_tol")?,
                "max_sweeps" => self.max_sweeps = v.parse().context("max_sweeps")?,
                "max_inner_iter" => self.max_inner_iter = v.parse().context("max_inner_iter")?,
                "adjusted_lambda" => self.adjusted_lambda = v.parse().context("adjusted_lambda")?,
                "zero_tol" => self.zero_tol = v.parse().context("zero_tol")?,
                other => bail!("unknown config key {other:?}"),
            }
        }
        Ok(())
    }

    /// Flat echo for the manifest; `apply_map` on a default spec restores it.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("structure".into(), structure_name(self.structure).into());
        m.insert("p".into(), self.p.to_string());
        m.insert("block_size".into(), self.block_size.to_string());
        m.insert("off_value".into(), self.off_value.to_string());
        m.insert("hub_value".into(), self.hub_value.to_string());
        m.insert(
            "n_grid".into(),
            self.n_grid
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        m.insert("repetitions".into(), self.repetitions.to_string());
        m.insert(
            "methods".into(),
            self.methods
                .iter()
                .map(|m| m.name().to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        m.insert("q".into(), self.q.to_string());
        m.insert("alpha".into(), self.alpha.to_string());
        m.insert("seed".into(), self.seed.to_string());
        if let Some(t) = self.threads {
            m.insert("threads".into(), t.to_string());
        }
        m.insert("out_dir".into(), self.out_dir.display().to_string());
        m.insert("outer_tol".into(), self.outer_tol.to_string());
        m.insert("gap_tol".into(), self.gap_tol.to_string());
        m.insert("max_sweeps".into(), self.max_sweeps.to_string());
        m.insert("max_inner_iter".into(), self.max_inner_iter.to_string());
        m.insert("adjusted_lambda".into(), self.adjusted_lambda.to_string());
        m.insert("zero_tol".into(), self.zero_tol.to_string());
        m
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut spec = SweepSpec::default();
        spec.apply_map(map)?;
        Ok(spec)
    }
}
