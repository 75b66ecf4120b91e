//! Column-major storage for an n × p panel of observations.

use crate::error::{Error, Result};

/// `n` observations of a `p`-dimensional vector, stored column by column so
/// that each per-dimension sample is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    /// Builds a matrix from column-major values (`values[j * n + i]` is row `i`
    /// of column `j`).
    pub fn from_column_major(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::param(format!("data matrix must be non-empty (n={n}, p={p})")));
        }
        if values.len() != n * p {
            return Err(Error::param(format!(
                "expected {} values for a {n}x{p} matrix, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!(
                "non-finite value at row {}, column {}",
                pos % n,
                pos / n
            )));
        }
        Ok(Self { n, p, values })
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if let Some(j) = columns.iter().position(|c| c.len() != n) {
            return Err(Error::param(format!(
                "column {j} has {} rows, expected {n}",
                columns[j].len()
            )));
        }
        Self::from_column_major(n, p, columns.concat())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        let mut values = vec![0.0; n * p];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::param(format!("row {i} has {} values, expected {p}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                values[j * n + i] = v;
            }
        }
        Self::from_column_major(n, p, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[col * self.n + row]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.p).map(|j| self.get(i, j)).collect()
    }

    /// Applies `f` to every cell.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_column_major(self.n, self.p, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Reorders columns so that new column `i` is old column `order[i]`.
    pub fn permute_columns(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.p {
            return Err(Error::param("permutation length must equal p"));
        }
        let cols = order.iter().map(|&j| self.column(j).to_vec()).collect();
        Self::from_columns(cols)
    }

    pub fn as_column_major(&self) -> &[f64] {
        &self.values
    }
}
