//! Hill estimation of positive extreme value indices, one dimension at a time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::numerics::{check_k, normal_quantile, top_order_statistics};

/// Number of upper order statistics used per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KChoice {
    per_dim: Vec<usize>,
    n: usize,
}

impl KChoice {
    pub fn uniform(k: usize, p: usize, n: usize) -> Result<Self> {
        Self::per_dimension(vec![k; p], n)
    }

    pub fn per_dimension(per_dim: Vec<usize>, n: usize) -> Result<Self> {
        if per_dim.is_empty() {
            return Err(Error::param("k choice needs at least one dimension"));
        }
        for (j, &k) in per_dim.iter().enumerate() {
            check_k(k, n).map_err(|e| e.in_dimension(j))?;
        }
        Ok(Self { per_dim, n })
    }

    pub fn k(&self, j: usize) -> usize {
        self.per_dim[j]
    }

    pub fn per_dim(&self) -> &[usize] {
        &self.per_dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.per_dim.len()
    }

    /// The common k when every dimension uses the same one.
    pub fn uniform_k(&self) -> Option<usize> {
        let k = self.per_dim[0];
        self.per_dim.iter().all(|&kj| kj == k).then_some(k)
    }

    pub fn permuted(&self, order: &[usize]) -> Self {
        Self { per_dim: order.iter().map(|&j| self.per_dim[j]).collect(), n: self.n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillEstimate {
    pub gamma: f64,
    /// `X_{n-k,n}`
    pub threshold: f64,
}

/// γ̂ = (1/k) Σ_{i=1..k} log(X_{n-i+1,n} / X_{n-k,n}).
///
/// Only the top `k + 1` order statistics need to be positive.
pub fn hill_estimate(sample: &[f64], k: usize) -> Result<HillEstimate> {
    let top = top_order_statistics(sample, k)?;
    let threshold = top.threshold();
    if threshold <= 0.0 {
        return Err(Error::domain(format!(
            "Hill undefined: non-positive tail threshold ({threshold})"
        )));
    }
    let sum: f64 = top.exceedances().iter().map(|&x| (x / threshold).ln()).sum();
    Ok(HillEstimate { gamma: sum / k as f64, threshold })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillEstimates {
    pub gamma_hat: Vec<f64>,
    pub k_choice: KChoice,
    pub thresholds: Vec<f64>,
}

impl HillEstimates {
    pub fn p(&self) -> usize {
        self.gamma_hat.len()
    }

    /// Dimensions whose estimate is exactly zero (all top values tied).
    pub fn degenerate_dims(&self) -> Vec<usize> {
        self.gamma_hat.iter().enumerate().filter(|(_, &g)| g == 0.0).map(|(j, _)| j).collect()
    }

    /// Builds estimates from raw parts, e.g. for tests of the statistics.
    pub fn from_parts(gamma_hat: Vec<f64>, k_choice: KChoice) -> Result<Self> {
        if gamma_hat.len() != k_choice.p() {
            return Err(Error::param("gamma_hat and k choice differ in length"));
        }
        if gamma_hat.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::param("Hill estimates must be finite and non-negative"));
        }
        let p = gamma_hat.len();
        Ok(Self { gamma_hat, k_choice, thresholds: vec![f64::NAN; p] })
    }
}

fn check_shape(data: &DataMatrix, ks: &KChoice) -> Result<()> {
    if ks.n() != data.n() || ks.p() != data.p() {
        return Err(Error::param(format!(
            "k choice is for n={}, p={} but data are n={}, p={}",
            ks.n(),
            ks.p(),
            data.n(),
            data.p()
        )));
    }
    Ok(())
}

fn collect(ks: &KChoice, per_col: Vec<Result<HillEstimate>>) -> Result<HillEstimates> {
    let mut gamma_hat = Vec::with_capacity(per_col.len());
    let mut thresholds = Vec::with_capacity(per_col.len());
    for (j, est) in per_col.into_iter().enumerate() {
        let est = est.map_err(|e| e.in_dimension(j))?;
        gamma_hat.push(est.gamma);
        thresholds.push(est.threshold);
    }
    Ok(HillEstimates { gamma_hat, k_choice: ks.clone(), thresholds })
}

/// Column-wise Hill estimates.
pub fn hill_estimates(data: &DataMatrix, ks: &KChoice) -> Result<HillEstimates> {
    check_shape(data, ks)?;
    let per_col = data.columns().zip(ks.per_dim()).map(|(c, &k)| hill_estimate(c, k)).collect();
    collect(ks, per_col)
}

/// Same as [`hill_estimates`], with columns spread over the rayon pool.
pub fn hill_estimates_par(data: &DataMatrix, ks: &KChoice) -> Result<HillEstimates> {
    check_shape(data, ks)?;
    let per_col = (0..data.p())
        .into_par_iter()
        .map(|j| hill_estimate(data.column(j), ks.k(j)))
        .collect();
    collect(ks, per_col)
}

/// Normal-approximation interval γ̂ (1 ± z/√k), z the standard normal
/// quantile at (1 + level)/2.
pub fn hill_confidence_interval(gamma_hat: f64, k: usize, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if k == 0 {
        return Err(Error::param("k must be positive"));
    }
    if !(gamma_hat >= 0.0) {
        return Err(Error::param("Hill estimate must be non-negative"));
    }
    let half = normal_quantile(0.5 * (1.0 + level))? / (k as f64).sqrt();
    Ok((gamma_hat * (1.0 - half), gamma_hat * (1.0 + half)))
}

/// Warns when k is far too small for the dimension: the asymptotics want
/// log p = o(k^{1/5}), and we only complain once k < (log p / 2)^5.
pub fn dimension_warning(k: usize, p: usize) -> Option<String> {
    if p < 2 {
        return None;
    }
    let bound = (0.5 * (p as f64).ln()).powi(5);
    ((k as f64) < bound).then(|| {
        format!("k={k} is small relative to p={p} (k < (ln p / 2)^5 = {bound:.1}); the Gumbel calibration may be unreliable")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_computed_estimate() {
        let est = hill_estimate(&[1.0, 2.0, 4.0, 8.0], 2).unwrap();
        assert!((est.gamma - 1.5 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(est.threshold, 2.0);
        assert_eq!(hill_estimate(&[3.3; 5], 2).unwrap().gamma, 0.0);
    }

    #[test]
    fn negative_values_below_threshold_are_fine() {
        let est = hill_estimate(&[-5.0, -1.0, 0.0, 1.0, 2.0, 4.0], 2).unwrap();
        assert!((est.gamma - 0.5 * (4f64.ln() + 2f64.ln())).abs() < 1e-15);
        let err = hill_estimate(&[-5.0, -1.0, 0.0, 1.0, 2.0, 4.0], 3).unwrap_err();
        assert!(matches!(err, Error::Domain(ref m) if m.contains("non-positive tail threshold")));
        assert!(matches!(hill_estimate(&[1.0, 2.0], 2), Err(Error::Parameter(_))));
    }

    #[test]
    fn column_errors_name_dimension() {
        let data = DataMatrix::from_columns(vec![vec![1.0, 2.0, 3.0], vec![-1.0, -2.0, 3.0]]).unwrap();
        let ks = KChoice::uniform(1, 2, 3).unwrap();
        let err = hill_estimates(&data, &ks).unwrap_err();
        assert!(err.to_string().contains("dimension 1"), "{err}");
    }

    #[test]
    fn duplicated_and_permuted_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cols: Vec<Vec<f64>> =
            (0..4).map(|_| (0..200).map(|_| rng.random::<f64>().powf(-0.7)).collect()).collect();
        let data = DataMatrix::from_columns(vec![cols[0].clone(), cols[0].clone(), cols[1].clone(), cols[2].clone()])
            .unwrap();
        let ks = KChoice::per_dimension(vec![20, 20, 30, 40], 200).unwrap();
        let est = hill_estimates(&data, &ks).unwrap();
        assert_eq!(est.gamma_hat[0], est.gamma_hat[1]);

        let order = [3, 0, 2, 1];
        let est_perm = hill_estimates(&data.permute_columns(&order).unwrap(), &ks.permuted(&order)).unwrap();
        for (i, &j) in order.iter().enumerate() {
            assert_eq!(est_perm.gamma_hat[i], est.gamma_hat[j]);
        }
        assert_eq!(hill_estimates_par(&data, &ks).unwrap(), est);
    }

    #[test]
    fn independent_pareto_columns() {
        let gammas = [0.5, 1.0, 1.5, 2.0];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cols = gammas
            .iter()
            .map(|&g| (0..10_000).map(|_| (1.0 - rng.random::<f64>()).powf(-g)).collect())
            .collect();
        let data = DataMatrix::from_columns(cols).unwrap();
        let est = hill_estimates(&data, &KChoice::uniform(500, 4, 10_000).unwrap()).unwrap();
        for (g_hat, g) in est.gamma_hat.iter().zip(gammas) {
            // sd of γ̂ is γ/√k; allow 4 sd
            assert!((g_hat - g).abs() < 4.0 * g / 500f64.sqrt(), "{g_hat} vs {g}");
        }
    }

    #[test]
    fn exact_pareto_gamma_moments() {
        // k γ̂/γ ~ Gamma(k, 1) for exact Pareto samples.
        let (n, k, reps, gamma) = (10_000, 1000, 300, 1.3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws: Vec<f64> = (0..reps)
            .map(|_| {
                let s: Vec<f64> = (0..n).map(|_| (1.0 - rng.random::<f64>()).powf(-gamma)).collect();
                k as f64 * hill_estimate(&s, k).unwrap().gamma / gamma
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / reps as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let kf = k as f64;
        assert!((mean - kf).abs() < 3.0 * (kf / reps as f64).sqrt(), "mean {mean}");
        // var of the sample variance of ~normal draws: 2σ⁴/(R-1)
        assert!((var - kf).abs() < 3.0 * kf * (2.0 / (reps - 1) as f64).sqrt(), "var {var}");
    }

    #[test]
    fn pareto_coverage_band() {
        // γ̂ ∈ 1 ± 3/√k in at least 99% of replications
        let (n, k, reps) = (10_000, 1000, 200);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let hits = (0..reps)
            .filter(|_| {
                let s: Vec<f64> = (0..n).map(|_| 1.0 / (1.0 - rng.random::<f64>())).collect();
                (hill_estimate(&s, k).unwrap().gamma - 1.0).abs() <= 3.0 / (k as f64).sqrt()
            })
            .count();
        assert!(hits as f64 >= 0.99 * reps as f64, "{hits}/{reps}");
    }

    #[test]
    fn confidence_intervals() {
        let (lo, hi) = hill_confidence_interval(1.0, 100, 0.95).unwrap();
        assert!((lo - 0.804_003_601_545_994_6).abs() < 1e-12 && (hi - 1.195_996_398_454_005_4).abs() < 1e-12);
        assert_eq!(hill_confidence_interval(0.0, 37, 0.9).unwrap(), (0.0, 0.0));
        let (lo, hi) = hill_confidence_interval(2.0, 400, 0.95).unwrap();
        assert!((lo - 1.804_003_601_545_994_6).abs() < 1e-12 && (hi - 2.195_996_398_454_005_4).abs() < 1e-12);
        assert!(hill_confidence_interval(1.0, 10, 1.0).is_err());
    }

    #[test]
    fn dimension_warning_only_when_gross() {
        assert!(dimension_warning(50, 50).is_none());
        assert!(dimension_warning(5, 10_000).is_some());
    }

    proptest! {
        #[test]
        fn scale_and_power_invariance(
            sample in prop::collection::vec(0.2f64..50.0, 10..80),
            c in 1e-3f64..1e3,
            a in 0.1f64..5.0,
            kf in 0.0f64..1.0,
        ) {
            let k = 1 + ((sample.len() - 2) as f64 * kf) as usize;
            let base = hill_estimate(&sample, k).unwrap().gamma;
            let scaled: Vec<f64> = sample.iter().map(|x| c * x).collect();
            let powered: Vec<f64> = sample.iter().map(|x| x.powf(a)).collect();
            prop_assert!((hill_estimate(&scaled, k).unwrap().gamma - base).abs() < 1e-12);
            prop_assert!((hill_estimate(&powered, k).unwrap().gamma - a * base).abs() < 1e-12 * a.max(1.0));
        }

        #[test]
        fn depends_only_on_top_order_statistics(
            sample in prop::collection::vec(1.0f64..100.0, 10..50),
            filler in prop::collection::vec(-100.0f64..0.5, 10..50),
        ) {
            let k = 4;
            let mut other = sample.clone();
            let mut sorted = sample.clone();
            sorted.sort_by(f64::total_cmp);
            let keep = sample.len() - k - 1;
            // replace everything below the threshold with smaller junk
            for (slot, f) in other.iter_mut().zip(filler.iter().cycle()) {
                if *slot < sorted[keep] {
                    *slot = f.min(sorted[keep] - 1.0);
                }
            }
            prop_assert_eq!(hill_estimate(&sample, k).unwrap(), hill_estimate(&other, k).unwrap());
        }
    }
}
