//! Data-generating processes for the size and power experiments.
//!
//! Models (A)/(B) share a latent panel of bivariate Cauchy pairs with scale
//! matrix [[1, 0.7], [0.7, 1]]; dimensions 2l and 2l+1 (0-based) read the two
//! coordinates of pair l. Models (C)/(D) share p + 1 unit Fréchet factors and
//! set X̃_j = max(Z_j, Z_{j+1}) / 2.
//!
//! Randomness is keyed by `(master_seed, stream_id)` through a ChaCha stream
//! cipher, so every replication owns an independent, reproducible stream and
//! results never depend on which worker ran them.

use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::dependence::{approx_omega_from_r, PrecisionMatrix, TailDepMatrix};
use crate::error::{Error, Result};
use crate::hill::KChoice;
use crate::numerics::{cauchy_sf, frechet1_sf, StudentT};

/// Off-diagonal of the latent Cauchy scale matrix in models (A) and (B).
pub const CAUCHY_SCALE_OFFDIAG: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Model {
    A,
    B,
    C,
    D,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::A, Model::B, Model::C, Model::D];
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Model::A => "A",
            Model::B => "B",
            Model::C => "C",
            Model::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().trim_matches(|c| c == '(' || c == ')').to_ascii_uppercase().as_str() {
            "A" => Ok(Model::A),
            "B" => Ok(Model::B),
            "C" => Ok(Model::C),
            "D" => Ok(Model::D),
            other => Err(Error::param(format!("unknown model '{other}' (expected A, B, C or D)"))),
        }
    }
}

/// Exponent used by model (D): `{1 - Fr_1(X̃)}^{-1/γ}` as printed, or
/// `{1 - Fr_1(X̃)}^{-γ}` to mirror model (B). The two agree when γ = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DExponent {
    #[default]
    Reciprocal,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: Model,
    pub n: usize,
    pub p: usize,
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub d_exponent: DExponent,
}

impl ModelSpec {
    pub fn new(model: Model, n: usize, gamma: Vec<f64>) -> Result<Self> {
        let spec = Self { model, n, p: gamma.len(), gamma, d_exponent: DExponent::default() };
        spec.validate()?;
        Ok(spec)
    }

    /// All indices equal to one.
    pub fn null(model: Model, n: usize, p: usize) -> Result<Self> {
        Self::new(model, n, vec![1.0; p])
    }

    pub fn with_d_exponent(mut self, e: DExponent) -> Self {
        self.d_exponent = e;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param(format!("model needs n ≥ 2, got {}", self.n)));
        }
        if self.p < 2 {
            return Err(Error::param(format!("model needs p ≥ 2, got {}", self.p)));
        }
        if self.gamma.len() != self.p {
            return Err(Error::param("index vector length differs from p"));
        }
        if let Some(g) = self.gamma.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::param(format!("extreme value indices must be positive, got {g}")));
        }
        Ok(())
    }
}

/// Independent randomness domains within one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Lane {
    Data = 1,
    Alternative = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    /// A counter-mode generator keyed by (master_seed, lane) on stream
    /// `stream_id`; the draw index is the cipher's block counter.
    pub fn rng(&self, lane: Lane) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&(lane as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn cauchy_pair<R: Rng>(rng: &mut R, rho: f64, rho_c: f64) -> (f64, f64) {
    let n1: f64 = rng.sample(StandardNormal);
    let n2: f64 = rng.sample(StandardNormal);
    let mut w: f64 = rng.sample(StandardNormal);
    while w == 0.0 {
        w = rng.sample(StandardNormal);
    }
    let w = w.abs();
    (n1 / w, (rho * n1 + rho_c * n2) / w)
}

fn check_offdiag(offdiag: f64) -> Result<(f64, f64)> {
    if !(offdiag > -1.0 && offdiag < 1.0) {
        return Err(Error::param(format!("scale off-diagonal must lie in (-1, 1), got {offdiag}")));
    }
    Ok((offdiag, (1.0 - offdiag * offdiag).sqrt()))
}

/// Draws bivariate Cauchy vectors Z/|W| with Z ~ N(0, [[1, ρ], [ρ, 1]]) and
/// W ~ N(0, 1) independent: a bivariate t with one degree of freedom and
/// standard Cauchy marginals.
pub fn bivariate_cauchy_pairs(count: usize, offdiag: f64, seed: SeedSpec) -> Result<Vec<(f64, f64)>> {
    let (rho, rho_c) = check_offdiag(offdiag)?;
    let mut rng = seed.rng(Lane::Data);
    Ok((0..count).map(|_| cauchy_pair(&mut rng, rho, rho_c)).collect())
}

/// A generated panel together with how many cells overflowed and were
/// saturated to `f64::MAX`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub data: DataMatrix,
    pub saturated: usize,
}

pub fn generate(spec: &ModelSpec, seed: SeedSpec) -> Result<DataMatrix> {
    Ok(generate_with_diagnostics(spec, seed)?.data)
}

pub fn generate_with_diagnostics(spec: &ModelSpec, seed: SeedSpec) -> Result<Generated> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let mut rng = seed.rng(Lane::Data);
    let mut latent = vec![0.0; n * p];
    match spec.model {
        Model::A | Model::B => {
            let (rho, rho_c) = check_offdiag(CAUCHY_SCALE_OFFDIAG)?;
            let pairs = p.div_ceil(2);
            for i in 0..n {
                for l in 0..pairs {
                    let (a, b) = cauchy_pair(&mut rng, rho, rho_c);
                    latent[2 * l * n + i] = a;
                    // odd p: the last pair's second coordinate is dropped
                    if 2 * l + 1 < p {
                        latent[(2 * l + 1) * n + i] = b;
                    }
                }
            }
        }
        Model::C | Model::D => {
            let mut z = vec![0.0; p + 1];
            for i in 0..n {
                for zi in z.iter_mut() {
                    let u: f64 = rng.sample(Open01);
                    *zi = -1.0 / u.ln();
                }
                for j in 0..p {
                    latent[j * n + i] = 0.5 * z[j].max(z[j + 1]);
                }
            }
        }
    }

    let mut saturated = 0usize;
    let mut clamp = |v: f64| {
        if v.is_infinite() {
            saturated += 1;
            f64::MAX.copysign(v)
        } else {
            v
        }
    };
    for (j, &g) in spec.gamma.iter().enumerate() {
        let col = &mut latent[j * n..(j + 1) * n];
        match spec.model {
            Model::A => {
                // St_1 → St_{1/γ}; the identity when γ = 1
                if g != 1.0 {
                    let t = StudentT::new(1.0 / g)?;
                    for x in col.iter_mut() {
                        let v = if *x > 0.0 {
                            t.upper_quantile(cauchy_sf(*x))
                        } else if *x < 0.0 {
                            -t.upper_quantile(cauchy_sf(-*x))
                        } else {
                            0.0
                        };
                        *x = clamp(v);
                    }
                }
            }
            Model::B => {
                for x in col.iter_mut() {
                    *x = clamp(cauchy_sf(*x).powf(-g));
                }
            }
            Model::C => {
                if g != 1.0 {
                    for x in col.iter_mut() {
                        *x = clamp(x.powf(g));
                    }
                }
            }
            Model::D => {
                let e = match spec.d_exponent {
                    DExponent::Reciprocal => -1.0 / g,
                    DExponent::Direct => -g,
                };
                for x in col.iter_mut() {
                    *x = clamp(frechet1_sf(*x).powf(e));
                }
            }
        }
    }
    Ok(Generated { data: DataMatrix::from_column_major(n, p, latent)?, saturated })
}

/// Sparse alternative: the support, and signed deviations δ_j = γ_j - 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltSpec {
    pub m: usize,
    pub support: Vec<usize>,
    pub deltas: Vec<f64>,
}

/// ⌊p^{1/4}⌋ computed in integers.
pub fn alternative_size(p: usize) -> usize {
    let mut m = (p as f64).powf(0.25) as usize;
    while (m + 1).pow(4) <= p {
        m += 1;
    }
    while m > 0 && m.pow(4) > p {
        m -= 1;
    }
    m
}

/// Draws m = ⌊p^{1/4}⌋ indices uniformly without replacement and sets
/// γ_j = 1 ± 2√(log p / k_j) on them (fair-coin signs), γ_j = 1 elsewhere.
pub fn draw_alternative(p: usize, ks: &KChoice, seed: SeedSpec) -> Result<(Vec<f64>, AltSpec)> {
    if p < 2 {
        return Err(Error::param("alternative needs p ≥ 2"));
    }
    if ks.p() != p {
        return Err(Error::param("k choice dimension differs from p"));
    }
    let mut rng = seed.rng(Lane::Alternative);
    let m = alternative_size(p);
    let mut support = sample_indices(&mut rng, p, m).into_vec();
    support.sort_unstable();
    let mut gamma = vec![1.0; p];
    let mut deltas = Vec::with_capacity(m);
    let logp = (p as f64).ln();
    for &j in &support {
        let magnitude = 2.0 * (logp / ks.k(j) as f64).sqrt();
        let delta = if rng.random_bool(0.5) { magnitude } else { -magnitude };
        if 1.0 + delta <= 0.0 {
            return Err(Error::domain(format!(
                "alternative index 1 + δ = {} is not positive in dimension {j}",
                1.0 + delta
            )));
        }
        gamma[j] = 1.0 + delta;
        deltas.push(delta);
    }
    Ok((gamma, AltSpec { m, support, deltas }))
}

/// Upper tail-dependence coefficient of a bivariate t with one degree of
/// freedom and correlation ρ: 2·t_2(-√(2(1-ρ)/(1+ρ))).
pub fn cauchy_tail_dependence(rho: f64) -> f64 {
    let x = -(2.0 * (1.0 - rho) / (1.0 + rho)).sqrt();
    // t_2 CDF: 1/2 + x / (2√(2 + x²))
    2.0 * (0.5 + x / (2.0 * (2.0 + x * x).sqrt()))
}

/// The model's limiting pairwise tail-dependence matrix R(1,1).
pub fn theoretical_tail_dependence(model: Model, p: usize) -> Result<TailDepMatrix> {
    if p == 0 {
        return Err(Error::param("p must be positive"));
    }
    let mut r = vec![0.0; p * p];
    for j in 0..p {
        r[j * p + j] = 1.0;
    }
    match model {
        Model::A | Model::B => {
            let lambda = cauchy_tail_dependence(CAUCHY_SCALE_OFFDIAG);
            for l in (0..p.saturating_sub(1)).step_by(2) {
                r[l * p + l + 1] = lambda;
                r[(l + 1) * p + l] = lambda;
            }
        }
        Model::C | Model::D => {
            for j in 0..p - 1 {
                r[j * p + j + 1] = 0.5;
                r[(j + 1) * p + j] = 0.5;
            }
        }
    }
    TailDepMatrix::from_entries(p, r)
}

/// Ω = R(1,1)⁻¹ for the model, treated as externally known.
pub fn model_precision(model: Model, p: usize) -> Result<PrecisionMatrix> {
    let inv = approx_omega_from_r(&theoretical_tail_dependence(model, p)?, 0.0)?;
    PrecisionMatrix::supplied(p, inv.entries().to_vec())
}
