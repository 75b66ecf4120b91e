//! CSV ingestion into a column-major data matrix.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use evindex::DataMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Preprocessing applied after parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    None,
    /// Multiply every cell by -1 (returns → losses).
    Negate,
    /// Negate, then set non-positive losses to 0 so only the loss tail carries mass.
    UpperTailOfLoss,
}

impl std::str::FromStr for Transform {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Transform::None),
            "negate" => Ok(Transform::Negate),
            "loss" | "upper-tail-of-loss" | "upper_tail_of_loss" => Ok(Transform::UpperTailOfLoss),
            _ => Err(CliError::usage(format!("unknown transform '{s}' (none, negate, loss)"))),
        }
    }
}

impl Transform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transform::None => x,
            Transform::Negate => -x,
            Transform::UpperTailOfLoss => (-x).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// Treat the first row as a header when any of its cells is not a number.
    #[default]
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    pub header: HeaderMode,
    pub transform: Transform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub matrix: DataMatrix,
    pub column_names: Vec<String>,
    pub transform: Transform,
}

pub fn ingest_csv(path: &Path, options: &IngestOptions) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_csv(file, options, &path.display().to_string())
}

/// Parses CSV text; `source_name` prefixes error messages.
pub fn parse_csv<R: Read>(reader: R, options: &IngestOptions, source_name: &str) -> Result<Dataset> {
    let fail = |message: String| CliError::Data { source_name: source_name.to_string(), message };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = rdr.records();
    let first = match records.next() {
        Some(r) => r.map_err(|e| fail(e.to_string()))?,
        None => return Err(fail("file is empty".into())),
    };
    let has_header = match options.header {
        HeaderMode::Present => true,
        HeaderMode::Absent => false,
        HeaderMode::Auto => first.iter().any(|c| c.parse::<f64>().is_err()),
    };
    let p = first.len();
    let (names, mut pending) = if has_header {
        let names: Vec<String> = first.iter().map(str::to_string).collect();
        let mut seen = HashSet::new();
        for (j, name) in names.iter().enumerate() {
            if !seen.insert(name.as_str()) {
                return Err(fail(format!("row 1, column {}: duplicate header '{name}'", j + 1)));
            }
        }
        (names, None)
    } else {
        ((1..=p).map(|j| format!("x{j}")).collect(), Some(first))
    };

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); p];
    let mut row_no = if has_header { 1 } else { 0 };
    loop {
        let rec = match pending.take() {
            Some(r) => r,
            None => match records.next() {
                Some(r) => r.map_err(|e| fail(e.to_string()))?,
                None => break,
            },
        };
        row_no += 1;
        if rec.len() == 1 && rec[0].is_empty() && p > 1 {
            continue;
        }
        if rec.len() != p {
            return Err(fail(format!("row {row_no}: expected {p} fields, found {}", rec.len())));
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| fail(format!("row {row_no}, column {}: cannot parse '{cell}' as a number", j + 1)))?;
            if !v.is_finite() {
                return Err(fail(format!("row {row_no}, column {}: non-finite value '{cell}'", j + 1)));
            }
            columns[j].push(options.transform.apply(v));
        }
    }
    let n = columns.first().map_or(0, Vec::len);
    if n < 2 {
        return Err(fail(format!("need at least 2 data rows, found {n}")));
    }
    let matrix = DataMatrix::from_columns(columns).map_err(|e| fail(e.to_string()))?;
    Ok(Dataset { matrix, column_names: names, transform: options.transform })
}

/// Writes a header row and one line per observation. Values use the shortest
/// representation that parses back to the same f64.
pub fn write_csv<W: Write>(data: &DataMatrix, names: &[String], w: W) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(names)?;
    let mut row = Vec::with_capacity(data.p());
    for i in 0..data.n() {
        row.clear();
        row.extend((0..data.p()).map(|j| data.get(i, j).to_string()));
        out.write_record(&row)?;
    }
    out.flush()
}

pub fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}
