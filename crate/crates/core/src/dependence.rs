//! Empirical tail dependence, the Wald-type benchmark tests and the
//! precision-weighted max statistic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::hill::{hill_estimates, HillEstimates, KChoice};
use crate::linalg::Cholesky;
use crate::maxtest::{estimate_warnings, gamma_bar, max_report, Calibration, MaxStatistic, NullSpec, TestReport};
use crate::numerics::{check_k, chi_square_quantile, chi_square_sf, top_order_statistics, Probability};

const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Pairwise empirical tail-dependence coefficients
/// Σ̃_ij = (1/k) #{s : X_s^(i) > X^(i)_{n-k,n}, X_s^(j) > X^(j)_{n-k,n}}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDepMatrix {
    p: usize,
    k: usize,
    n: usize,
    entries: Vec<f64>,
}

impl TailDepMatrix {
    /// Wraps a known coefficient matrix (row-major), e.g. a model's
    /// theoretical R(1,1). `k` and `n` are recorded as zero.
    pub fn from_entries(p: usize, entries: Vec<f64>) -> Result<Self> {
        check_square(p, &entries)?;
        check_symmetric(p, &entries)?;
        if let Some(v) = entries.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::param(format!("tail dependence coefficient {v} outside [0, 1]")));
        }
        Ok(Self { p, k: 0, n: 0, entries })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.p + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Dimensions whose diagonal falls below 1 because of ties at the
    /// threshold.
    pub fn tied_dims(&self) -> Vec<usize> {
        (0..self.p).filter(|&j| self.get(j, j) < 1.0).collect()
    }

    fn ridged(&self, ridge: f64) -> Result<Vec<f64>> {
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::param(format!("ridge must be non-negative, got {ridge}")));
        }
        let mut a = self.entries.clone();
        for j in 0..self.p {
            a[j * self.p + j] += ridge;
        }
        Ok(a)
    }
}

fn check_square(p: usize, entries: &[f64]) -> Result<()> {
    if p == 0 || entries.len() != p * p {
        return Err(Error::param(format!("expected a {p}x{p} matrix, got {} entries", entries.len())));
    }
    if entries.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("matrix has non-finite entries"));
    }
    Ok(())
}

fn check_symmetric(p: usize, entries: &[f64]) -> Result<()> {
    for i in 0..p {
        for j in i + 1..p {
            let (a, b) = (entries[i * p + j], entries[j * p + i]);
            if (a - b).abs() > SYMMETRY_TOLERANCE {
                return Err(Error::param(format!("matrix not symmetric at ({i}, {j}): {a} vs {b}")));
            }
        }
    }
    Ok(())
}

/// Rows exceeding a column's threshold, packed 64 per word.
fn exceedance_bits(column: &[f64], k: usize) -> Result<Vec<u64>> {
    let threshold = top_order_statistics(column, k)?.threshold();
    let mut bits = vec![0u64; column.len().div_ceil(64)];
    for (s, &x) in column.iter().enumerate() {
        if x > threshold {
            bits[s / 64] |= 1 << (s % 64);
        }
    }
    Ok(bits)
}

fn joint_count(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
}

/// Empirical tail-dependence matrix with a common `k`.
pub fn tail_dependence_matrix(data: &DataMatrix, k: usize) -> Result<TailDepMatrix> {
    let (n, p) = (data.n(), data.p());
    check_k(k, n)?;
    let bits = data
        .columns()
        .enumerate()
        .map(|(j, c)| exceedance_bits(c, k).map_err(|e| e.in_dimension(j)))
        .collect::<Result<Vec<_>>>()?;
    let row = |i: usize| -> Vec<u32> { (i..p).map(|j| joint_count(&bits[i], &bits[j])).collect() };
    // integer counts, so the parallel path is bit-identical to the serial one
    let upper: Vec<Vec<u32>> = if p * p * bits[0].len() > 1 << 20 {
        (0..p).into_par_iter().map(row).collect()
    } else {
        (0..p).map(row).collect()
    };
    let kf = k as f64;
    let mut entries = vec![0.0; p * p];
    for (i, counts) in upper.iter().enumerate() {
        for (off, &c) in counts.iter().enumerate() {
            let j = i + off;
            let v = c as f64 / kf;
            entries[i * p + j] = v;
            entries[j * p + i] = v;
        }
    }
    Ok(TailDepMatrix { p, k, n, entries })
}

/// Where a precision matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OmegaOrigin {
    Supplied,
    InvertedR { ridge: f64 },
}

/// Symmetric p × p weight matrix Ω with positive diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionMatrix {
    p: usize,
    entries: Vec<f64>,
    origin: OmegaOrigin,
    diagonal: bool,
}

impl PrecisionMatrix {
    /// A caller-supplied Ω (row-major). Must be symmetric within 1e-8 and have
    /// a strictly positive diagonal.
    pub fn supplied(p: usize, entries: Vec<f64>) -> Result<Self> {
        Self::build(p, entries, OmegaOrigin::Supplied)
    }

    pub fn identity(p: usize) -> Self {
        let mut entries = vec![0.0; p * p];
        for j in 0..p {
            entries[j * p + j] = 1.0;
        }
        Self { p, entries, origin: OmegaOrigin::Supplied, diagonal: true }
    }

    fn build(p: usize, entries: Vec<f64>, origin: OmegaOrigin) -> Result<Self> {
        check_square(p, &entries)?;
        check_symmetric(p, &entries)?;
        if let Some(j) = (0..p).find(|&j| !(entries[j * p + j] > 0.0)) {
            return Err(Error::param(format!("precision matrix diagonal ω[{j}][{j}] must be positive")));
        }
        let diagonal = (0..p).all(|i| (0..p).all(|j| i == j || entries[i * p + j] == 0.0));
        Ok(Self { p, entries, origin, diagonal })
    }

    /// Parses whitespace-separated rows of reals (p rows of p values).
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| {
                        Error::param(format!("line {}: cannot parse '{tok}' as a number", line_no + 1))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let p = rows.len();
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::param(format!("precision matrix row {i} has {} values, expected {p}", rows[i].len())));
        }
        Self::supplied(p, rows.concat())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.p {
            let row: Vec<String> = (0..self.p).map(|j| self.get(i, j).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.p + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn origin(&self) -> OmegaOrigin {
        self.origin
    }
}

/// Standardized deviations ζ_j = √k_j (γ̂_j / γ⁰_j - 1); `starred` when γ⁰
/// is replaced by γ̄.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaVector {
    pub values: Vec<f64>,
    pub starred: bool,
    pub gamma_bar: Option<f64>,
    /// γ̂_j / γ⁰_j - 1
    ratios: Vec<f64>,
    k: Vec<usize>,
}

impl ZetaVector {
    pub fn p(&self) -> usize {
        self.values.len()
    }
}

pub fn zeta(estimates: &HillEstimates, null: &NullSpec) -> Result<ZetaVector> {
    let p = estimates.p();
    let (gamma0, gamma_bar) = match null {
        NullSpec::Specified(g0) => {
            if g0.len() != p {
                return Err(Error::param(format!("null index vector has length {}, expected {p}", g0.len())));
            }
            if g0.iter().any(|g| !(*g > 0.0)) {
                return Err(Error::param("null indices must be positive"));
            }
            (g0.clone(), None)
        }
        NullSpec::Equal => {
            let g = gamma_bar(estimates)?;
            (vec![g; p], Some(g))
        }
    };
    let k = estimates.k_choice.per_dim().to_vec();
    let ratios: Vec<f64> = estimates.gamma_hat.iter().zip(&gamma0).map(|(g, g0)| g / g0 - 1.0).collect();
    let values = ratios.iter().zip(&k).map(|(r, &kj)| (kj as f64).sqrt() * r).collect();
    Ok(ZetaVector { values, starred: gamma_bar.is_some(), gamma_bar, ratios, k })
}

/// T_W = ζᵀ (Σ̃ + ridge·I)⁻¹ ζ via Cholesky; no explicit inverse.
pub fn wald_statistic(z: &ZetaVector, sigma: &TailDepMatrix, ridge: f64) -> Result<f64> {
    Ok(wald_parts(z, sigma, ridge)?.0)
}

/// Statistic plus per-dimension terms ζ_j (Σ⁻¹ζ)_j, which sum to it.
fn wald_parts(z: &ZetaVector, sigma: &TailDepMatrix, ridge: f64) -> Result<(f64, Vec<f64>)> {
    if z.p() != sigma.p() {
        return Err(Error::param(format!("ζ has length {} but Σ̃ is {}x{}", z.p(), sigma.p(), sigma.p())));
    }
    let chol = Cholesky::factor(&sigma.ridged(ridge)?, sigma.p())?;
    let stat = chol.quadratic_form(&z.values);
    let solved = chol.solve(&z.values);
    let terms = z.values.iter().zip(&solved).map(|(a, b)| a * b).collect();
    Ok((stat, terms))
}

/// Wald-type test from precomputed estimates and Σ̃.
///
/// Specified null: T_W against χ²_p. Equal indices: ζ* against χ²_{p-1}.
/// Rejection is strict: T_W > χ²_{df,1-α}.
pub fn wald_test_from_estimates(
    estimates: &HillEstimates,
    sigma: &TailDepMatrix,
    null: &NullSpec,
    alpha: Probability,
    ridge: f64,
) -> Result<TestReport> {
    let p = estimates.p();
    let z = zeta(estimates, null)?;
    let df = if z.starred { p - 1 } else { p };
    if df < 1 {
        return Err(Error::param("Wald test of equal indices needs p ≥ 2"));
    }
    let (stat, terms) = wald_parts(&z, sigma, ridge)?;
    let threshold = chi_square_quantile(1.0 - alpha.value(), df)?;
    let argmax = MaxStatistic::from_contribs(terms.clone()).argmax;
    let mut warnings = estimate_warnings(estimates);
    let tied = sigma.tied_dims();
    if !tied.is_empty() {
        warnings.push(format!("ties at the tail threshold reduce Σ̃ diagonal below 1 in dimensions {tied:?}"));
    }
    let dff = df as f64;
    Ok(TestReport {
        test: if z.starred { "T*_W" } else { "T_W" }.to_string(),
        statistic: stat,
        normalized: (stat - dff) / (2.0 * dff).sqrt(),
        threshold,
        p_value: chi_square_sf(stat, df)?,
        reject: stat > threshold,
        alpha: alpha.value(),
        calibration: Calibration::ChiSquare { df },
        per_dim_contrib: terms,
        argmax_dim: argmax,
        gamma_bar: z.gamma_bar,
        gamma_hat: estimates.gamma_hat.clone(),
        k: estimates.k_choice.per_dim().to_vec(),
        warnings,
    })
}

/// Hill estimation, Σ̃ and the Wald-type test. Requires a uniform k.
pub fn wald_test(
    data: &DataMatrix,
    ks: &KChoice,
    null: &NullSpec,
    alpha: Probability,
    ridge: f64,
) -> Result<TestReport> {
    let k = ks
        .uniform_k()
        .ok_or_else(|| Error::param("Wald test requires the same k in every dimension"))?;
    let estimates = hill_estimates(data, ks)?;
    let sigma = tail_dependence_matrix(data, k)?;
    wald_test_from_estimates(&estimates, &sigma, null, alpha, ridge)
}

/// Ω = (Σ̃ + ridge·I)⁻¹.
pub fn approx_omega_from_r(sigma: &TailDepMatrix, ridge: f64) -> Result<PrecisionMatrix> {
    let chol = Cholesky::factor(&sigma.ridged(ridge)?, sigma.p())?;
    PrecisionMatrix::build(sigma.p(), chol.inverse(), OmegaOrigin::InvertedR { ridge })
}

/// T_Ω = max_j η_j² / ω_jj with η = Ωζ.
///
/// For diagonal Ω the terms reduce to ω_jj k_j (γ̂_j/γ⁰_j - 1)², which is
/// evaluated directly so that Ω = I reproduces T bit for bit.
pub fn statistic_t_omega(z: &ZetaVector, omega: &PrecisionMatrix) -> Result<MaxStatistic> {
    let p = z.p();
    if omega.p() != p {
        return Err(Error::param(format!("Ω is {}x{} but ζ has length {p}", omega.p(), omega.p())));
    }
    if let Some(j) = (0..p).find(|&j| !(omega.get(j, j) > 0.0)) {
        return Err(Error::param(format!("Ω diagonal entry {j} is not positive")));
    }
    let contribs = if omega.diagonal {
        (0..p).map(|j| omega.get(j, j) * (z.k[j] as f64 * (z.ratios[j] * z.ratios[j]))).collect()
    } else {
        (0..p)
            .map(|j| {
                let row = &omega.entries[j * p..(j + 1) * p];
                let eta: f64 = row.iter().zip(&z.values).map(|(w, v)| w * v).sum();
                eta * eta / omega.get(j, j)
            })
            .collect()
    };
    Ok(MaxStatistic::from_contribs(contribs))
}

/// T_Ω (or its starred form under equal indices), Gumbel-calibrated.
pub fn omega_test_from_estimates(
    estimates: &HillEstimates,
    omega: &PrecisionMatrix,
    null: &NullSpec,
    alpha: Probability,
) -> Result<TestReport> {
    let z = zeta(estimates, null)?;
    let stat = statistic_t_omega(&z, omega)?;
    let name = if z.starred { "T*_Omega" } else { "T_Omega" };
    max_report(name, stat, z.gamma_bar, estimates, alpha)
}
