//! Report documents and their JSON / CSV / SVG renderings.

use std::fmt::Write as _;
use std::path::Path;

use evindex::hill::{hill_confidence_interval, hill_estimates, KChoice};
use evindex::maxtest::{Calibration, NullSpec, TestReport};
use evindex::DataMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::ingest::Transform;
use crate::svg;
use crate::sweep::SweepResult;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            _ => Err(CliError::usage(format!("unknown format '{s}' (text, json, csv, svg)"))),
        }
    }
}

impl Format {
    /// Guesses the format from an output file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension()?.to_str()?.parse().ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input: Option<String>,
    pub transform: Transform,
    pub null: NullSpec,
    pub alpha: f64,
    pub ridge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub k: usize,
    pub test: String,
    pub report: Option<TestReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillRow {
    pub column: String,
    pub gamma_hat: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Per-dimension Hill estimates with confidence limits at one k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillPanel {
    pub k: usize,
    pub level: f64,
    pub rows: Vec<HillRow>,
}

impl HillPanel {
    pub fn compute(data: &DataMatrix, names: &[String], k: usize, level: f64) -> Result<Self> {
        let est = hill_estimates(data, &KChoice::uniform(k, data.p(), data.n())?)?;
        let rows = est
            .gamma_hat
            .iter()
            .zip(names)
            .map(|(&g, name)| {
                let (lower, upper) = hill_confidence_interval(g, k, level)?;
                Ok(HillRow { column: name.clone(), gamma_hat: g, lower, upper })
            })
            .collect::<Result<_>>()?;
        Ok(Self { k, level, rows })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub run: RunInfo,
    pub columns: Vec<String>,
    pub results: Vec<ResultEntry>,
    pub alpha: f64,
    pub hill: Option<HillPanel>,
}

impl ReportDocument {
    pub fn new(run: RunInfo, columns: Vec<String>) -> Self {
        let alpha = run.alpha;
        Self { schema_version: SCHEMA_VERSION, run, columns, results: Vec::new(), alpha, hill: None }
    }

    pub fn push(&mut self, k: usize, test: String, outcome: evindex::Result<TestReport>) {
        let (report, error) = match outcome {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        self.results.push(ResultEntry { k, test, report, error });
    }

    /// Entries ordered by test, then k.
    pub fn add_sweep(&mut self, sweep: &SweepResult) {
        for curve in &sweep.curves {
            for pt in &curve.points {
                self.results.push(ResultEntry {
                    k: pt.k,
                    test: curve.test.to_string(),
                    report: pt.report.clone(),
                    error: pt.error.clone(),
                });
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(s).map_err(|e| CliError::Data {
            source_name: "report".into(),
            message: format!("invalid report JSON: {e}"),
        })?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(CliError::usage(format!(
                "report schema version {} is not supported (expected {SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = [
            "k", "test", "statistic", "normalized", "threshold", "p_value", "reject", "alpha", "calibration",
            "argmax_dim", "argmax_column", "gamma_bar", "warnings", "error",
        ];
        w.write_record(header).expect("in-memory write");
        for e in &self.results {
            let row: Vec<String> = match &e.report {
                Some(r) => vec![
                    e.k.to_string(),
                    e.test.clone(),
                    r.statistic.to_string(),
                    r.normalized.to_string(),
                    r.threshold.to_string(),
                    r.p_value.to_string(),
                    r.reject.to_string(),
                    r.alpha.to_string(),
                    match r.calibration {
                        Calibration::Gumbel { p } => format!("gumbel(p={p})"),
                        Calibration::ChiSquare { df } => format!("chi2(df={df})"),
                    },
                    r.argmax_dim.to_string(),
                    self.columns.get(r.argmax_dim).cloned().unwrap_or_default(),
                    r.gamma_bar.map(|g| g.to_string()).unwrap_or_default(),
                    r.warnings.join("; "),
                    String::new(),
                ],
                None => {
                    let mut row = vec![String::new(); header.len()];
                    row[0] = e.k.to_string();
                    row[1] = e.test.clone();
                    row[13] = e.error.clone().unwrap_or_default();
                    row
                }
            };
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.results {
            match &e.report {
                Some(r) => {
                    let _ = writeln!(
                        s,
                        "{:<18} k={:<5} stat={:<12.6} threshold={:<10.4} p={:<10.4e} {} (max at {})",
                        e.test,
                        e.k,
                        r.statistic,
                        r.threshold,
                        r.p_value,
                        if r.reject { "REJECT" } else { "accept" },
                        self.columns.get(r.argmax_dim).map_or("?", String::as_str),
                    );
                    for w in &r.warnings {
                        let _ = writeln!(s, "  warning: {w}");
                    }
                }
                None => {
                    let _ = writeln!(s, "{:<18} k={:<5} failed: {}", e.test, e.k, e.error.as_deref().unwrap_or("?"));
                }
            }
        }
        s
    }

    pub fn render(&self, format: Format) -> Result<String> {
        if self.results.is_empty() && self.hill.is_none() {
            return Err(CliError::usage("nothing to report: no test results"));
        }
        Ok(match format {
            Format::Text => self.to_text(),
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
            Format::Svg => svg::render(self),
        })
    }
}

/// Renders the document and writes it to `out`, or to stdout when `out` is None.
pub fn emit_report(doc: &ReportDocument, format: Format, out: Option<&Path>) -> Result<()> {
    let body = doc.render(format)?;
    write_output(out, &body)
}

pub fn write_output(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::io(path, e)),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(body.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}
