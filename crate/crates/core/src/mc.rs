//! Monte Carlo size and power experiments.
//!
//! Replication r of every cell draws from stream r of the master seed, so a
//! report is a pure function of its configuration: the worker count only
//! changes how fast it is produced.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::KChoice;
use crate::numerics::Probability;
use crate::procedure::{run_tests, Family, OmegaSource, TestContext, TestSpec};
use crate::simulate::{
    draw_alternative, generate, model_precision, DExponent, Model, ModelSpec, SeedSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Null,
    Alternative,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::Null => "null",
            Hypothesis::Alternative => "alternative",
        })
    }
}

impl FromStr for Hypothesis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "null" | "h0" | "size" => Ok(Hypothesis::Null),
            "alternative" | "alt" | "h1" | "power" => Ok(Hypothesis::Alternative),
            other => Err(Error::param(format!("unknown hypothesis '{other}'"))),
        }
    }
}

/// Stream reserved for the single alternative shared by all replications.
const FIXED_ALTERNATIVE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub models: Vec<Model>,
    pub tests: Vec<TestSpec>,
    pub n: usize,
    pub p_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub alpha: Probability,
    pub replications: usize,
    pub hypothesis: Hypothesis,
    pub master_seed: u64,
    /// Ridge added to Σ̃ before inversion (Wald and `T_Omega(r)`).
    #[serde(default)]
    pub ridge: f64,
    #[serde(default)]
    pub d_exponent: DExponent,
    /// Draw one alternative per (p, k) and reuse it in every replication.
    #[serde(default)]
    pub fixed_alternative: bool,
}

impl ExperimentConfig {
    /// n = 1000, α = 0.05, 1000 replications, ridge 0.
    pub fn new(models: Vec<Model>, tests: Vec<TestSpec>, p_values: Vec<usize>, k_values: Vec<usize>) -> Self {
        Self {
            models,
            tests,
            n: 1000,
            p_values,
            k_values,
            alpha: Probability::default(),
            replications: 1000,
            hypothesis: Hypothesis::Null,
            master_seed: 0,
            ridge: 0.0,
            d_exponent: DExponent::default(),
            fixed_alternative: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::param("replications must be at least 1"));
        }
        if self.models.is_empty() || self.tests.is_empty() || self.p_values.is_empty() || self.k_values.is_empty() {
            return Err(Error::param("models, tests, p and k grids must all be non-empty"));
        }
        if self.n < 2 {
            return Err(Error::param("n must be at least 2"));
        }
        if let Some(p) = self.p_values.iter().find(|&&p| p < 2) {
            return Err(Error::param(format!("p = {p} is below 2")));
        }
        if let Some(k) = self.k_values.iter().find(|&&k| k == 0 || k >= self.n) {
            return Err(Error::param(format!("k = {k} must satisfy 1 ≤ k < n = {}", self.n)));
        }
        if self.tests.iter().any(|t| t.family == Family::Omega(OmegaSource::File)) {
            return Err(Error::param("T_Omega(file) is not available in experiments; use T_Omega(model)"));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::param("ridge must be a non-negative finite number"));
        }
        Ok(())
    }
}

/// Aggregated outcome of one (model, test, p, k) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCell {
    pub model: Model,
    pub test: TestSpec,
    pub hypothesis: Hypothesis,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub replications: usize,
    pub rejections: usize,
    pub failures: usize,
    /// Rejections over successful replications; `None` when more than half failed.
    pub rejection_rate: Option<f64>,
    /// √(r(1-r)/R) over successful replications.
    pub mc_stderr: Option<f64>,
}

impl McCell {
    pub fn is_valid(&self) -> bool {
        self.rejection_rate.is_some()
    }

    pub fn acceptances(&self) -> usize {
        self.replications - self.failures - self.rejections
    }

    /// Normal-approximation interval rate ± z·stderr, clipped to [0, 1].
    pub fn interval(&self, z: f64) -> Option<(f64, f64)> {
        let (r, se) = (self.rejection_rate?, self.mc_stderr?);
        Some(((r - z * se).max(0.0), (r + z * se).min(1.0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub package: String,
    pub version: String,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub cells: Vec<McCell>,
    pub provenance: Provenance,
}

const CSV_HEADER: [&str; 11] = [
    "model", "test", "hypothesis", "n", "p", "k", "replications", "rejections", "failures", "rejection_rate",
    "mc_stderr",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl McReport {
    pub fn cell(&self, model: Model, test: &TestSpec, p: usize, k: usize) -> Option<&McCell> {
        self.cells.iter().find(|c| c.model == model && &c.test == test && c.p == p && c.k == k)
    }

    /// One row per cell; invalid rates are left empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::param(format!("cannot write report: {e}"));
        out.write_record(CSV_HEADER).map_err(io)?;
        for c in &self.cells {
            out.write_record([
                c.model.to_string(),
                c.test.to_string(),
                c.hypothesis.to_string(),
                c.n.to_string(),
                c.p.to_string(),
                c.k.to_string(),
                c.replications.to_string(),
                c.rejections.to_string(),
                c.failures.to_string(),
                opt(c.rejection_rate),
                opt(c.mc_stderr),
            ])
            .map_err(io)?;
        }
        out.flush().map_err(|e| Error::param(format!("cannot write report: {e}")))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("report CSV is UTF-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::param(format!("invalid report JSON: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Reject,
    Accept,
    Fail,
}

/// Runs the experiment on the global rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<McReport> {
    config.validate()?;
    let mut cells = Vec::new();
    for &model in &config.models {
        for &p in &config.p_values {
            cells.extend(run_model_p(config, model, p)?);
        }
    }
    Ok(McReport {
        cells,
        provenance: Provenance {
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
        },
    })
}

/// Runs the experiment on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(config: &ExperimentConfig, threads: usize) -> Result<McReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::param(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| run_experiment(config))
}

fn run_model_p(config: &ExperimentConfig, model: Model, p: usize) -> Result<Vec<McCell>> {
    let mut ctx = TestContext::new(config.alpha);
    ctx.ridge = config.ridge;
    if config.tests.iter().any(|t| t.family == Family::Omega(OmegaSource::Model)) {
        ctx.model_omega = Some(model_precision(model, p)?);
    }
    let gamma0 = vec![1.0; p];
    let fixed: Option<Vec<Vec<f64>>> = match (config.hypothesis, config.fixed_alternative) {
        (Hypothesis::Alternative, true) => Some(
            config
                .k_values
                .iter()
                .map(|&k| {
                    let ks = KChoice::uniform(k, p, config.n)?;
                    Ok(draw_alternative(p, &ks, SeedSpec::new(config.master_seed, FIXED_ALTERNATIVE_STREAM))?.0)
                })
                .collect::<Result<_>>()?,
        ),
        _ => None,
    };

    let n_tests = config.tests.len();
    let outcomes: Vec<Vec<Outcome>> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let seed = SeedSpec::new(config.master_seed, r as u64);
            let mut row = Vec::with_capacity(config.k_values.len() * n_tests);
            let null_data = match config.hypothesis {
                Hypothesis::Null => Some(
                    ModelSpec::null(model, config.n, p)
                        .map(|s| s.with_d_exponent(config.d_exponent))
                        .and_then(|s| generate(&s, seed)),
                ),
                Hypothesis::Alternative => None,
            };
            for (ki, &k) in config.k_values.iter().enumerate() {
                let data = match &null_data {
                    Some(d) => d.clone(),
                    None => {
                        let gamma = match &fixed {
                            Some(g) => Ok(g[ki].clone()),
                            None => KChoice::uniform(k, p, config.n)
                                .and_then(|ks| draw_alternative(p, &ks, seed))
                                .map(|(g, _)| g),
                        };
                        gamma
                            .and_then(|g| ModelSpec::new(model, config.n, g))
                            .and_then(|s| generate(&s.with_d_exponent(config.d_exponent), seed))
                    }
                };
                match data.and_then(|d| run_tests(&d, k, &config.tests, Some(&gamma0), &ctx)) {
                    Ok(results) => row.extend(results.into_iter().map(|res| match res {
                        Ok(rep) if rep.reject => Outcome::Reject,
                        Ok(_) => Outcome::Accept,
                        Err(_) => Outcome::Fail,
                    })),
                    Err(_) => row.extend(std::iter::repeat_n(Outcome::Fail, n_tests)),
                }
            }
            row
        })
        .collect();

    let mut cells = Vec::with_capacity(config.k_values.len() * n_tests);
    for (ki, &k) in config.k_values.iter().enumerate() {
        for (ti, test) in config.tests.iter().enumerate() {
            let idx = ki * n_tests + ti;
            let rejections = outcomes.iter().filter(|o| o[idx] == Outcome::Reject).count();
            let failures = outcomes.iter().filter(|o| o[idx] == Outcome::Fail).count();
            let ok = config.replications - failures;
            let valid = ok > 0 && 2 * failures <= config.replications;
            let rate = valid.then(|| rejections as f64 / ok as f64);
            cells.push(McCell {
                model,
                test: *test,
                hypothesis: config.hypothesis,
                n: config.n,
                p,
                k,
                replications: config.replications,
                rejections,
                failures,
                rejection_rate: rate,
                mc_stderr: rate.map(|r| (r * (1.0 - r) / ok as f64).sqrt()),
            });
        }
    }
    Ok(cells)
}

/// One transcribed rejection rate. `alt_k` is an alternative label for the
/// same column (the power table's "k = 100" columns are also matched by k = 80).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCell {
    pub model: Model,
    pub test: String,
    pub hypothesis: Hypothesis,
    pub p: usize,
    pub k: usize,
    pub alt_k: Option<usize>,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferenceTable {
    pub cells: Vec<ReferenceCell>,
}

const TYPE_ONE_ERROR_CSV: &str = include_str!("../data/type_one_error.csv");
const POWER_CSV: &str = include_str!("../data/power.csv");

impl ReferenceTable {
    /// Columns: model, test, hypothesis, p, k, alt_k (may be empty), rate.
    pub fn from_reader<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let mut cells = Vec::new();
        for (i, rec) in rdr.deserialize::<ReferenceCell>().enumerate() {
            cells.push(rec.map_err(|e| Error::param(format!("reference table row {}: {e}", i + 2)))?);
        }
        Ok(Self { cells })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)
            .map_err(|e| Error::param(format!("cannot open reference table {}: {e}", path.display())))?;
        Self::from_reader(f)
    }

    /// Reference type I error rates (n = 1000, 1000 replications, α = 0.05).
    pub fn type_one_error() -> Self {
        Self::from_reader(TYPE_ONE_ERROR_CSV.as_bytes()).expect("bundled table parses")
    }

    /// Reference power under the sparse alternative.
    pub fn power() -> Self {
        Self::from_reader(POWER_CSV.as_bytes()).expect("bundled table parses")
    }

    pub fn builtin(hypothesis: Hypothesis) -> Self {
        match hypothesis {
            Hypothesis::Null => Self::type_one_error(),
            Hypothesis::Alternative => Self::power(),
        }
    }

    pub fn lookup(&self, model: Model, test: &str, hypothesis: Hypothesis, p: usize, k: usize) -> Option<&ReferenceCell> {
        let find = |use_alt: bool| {
            self.cells.iter().find(|c| {
                c.model == model
                    && c.test == test
                    && c.hypothesis == hypothesis
                    && c.p == p
                    && if use_alt { c.alt_k == Some(k) } else { c.k == k }
            })
        };
        find(false).or_else(|| find(true))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDiff {
    pub model: Model,
    pub test: String,
    pub hypothesis: Hypothesis,
    pub p: usize,
    pub k: usize,
    pub observed: Option<f64>,
    pub reference: f64,
    pub deviation: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffSummary {
    pub tolerance: f64,
    pub rows: Vec<CellDiff>,
    pub max_deviation: f64,
    pub flagged: usize,
}

impl DiffSummary {
    pub fn passed(&self) -> bool {
        self.flagged == 0
    }
}

/// Compares every report cell with its reference entry. Cells deviating by
/// more than `tolerance`, and invalid cells, are flagged.
pub fn compare_tables(report: &McReport, reference: &ReferenceTable, tolerance: f64) -> Result<DiffSummary> {
    if !(tolerance >= 0.0) {
        return Err(Error::param("tolerance must be non-negative"));
    }
    let mut rows = Vec::with_capacity(report.cells.len());
    for c in &report.cells {
        let label = c.test.family_label();
        let r = reference.lookup(c.model, &label, c.hypothesis, c.p, c.k).ok_or_else(|| {
            Error::param(format!(
                "no reference entry for model {}, test {label}, {} hypothesis, p = {}, k = {}",
                c.model, c.hypothesis, c.p, c.k
            ))
        })?;
        let deviation = c.rejection_rate.map(|x| (x - r.rate).abs());
        rows.push(CellDiff {
            model: c.model,
            test: label,
            hypothesis: c.hypothesis,
            p: c.p,
            k: c.k,
            observed: c.rejection_rate,
            reference: r.rate,
            deviation,
            flagged: deviation.is_none_or(|d| d > tolerance),
        });
    }
    let max_deviation = rows.iter().filter_map(|r| r.deviation).fold(0.0, f64::max);
    let flagged = rows.iter().filter(|r| r.flagged).count();
    Ok(DiffSummary { tolerance, rows, max_deviation, flagged })
}
