//! Max-type statistics T (specified indices) and T* (equal indices) with
//! their Gumbel-limit calibration.
//!
//! Under the null, `T - 2 log p + log log p` converges to the law with CDF
//! `exp(-exp(-x/2)/√π)`; the same holds for T* with the indices replaced by
//! their average. H0 is rejected iff `T >= 2 log p - log log p + q_α`.

use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::hill::{dimension_warning, hill_estimates, HillEstimates, KChoice};
use crate::numerics::{gumbel_limit_sf, gumbel_test_quantile, Probability};

/// The hypothesis under test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NullSpec {
    /// γ_j = γ⁰_j for all j.
    Specified(Vec<f64>),
    /// γ_1 = … = γ_p.
    Equal,
}

impl NullSpec {
    pub fn specified(gamma0: Vec<f64>) -> Result<Self> {
        validate_gamma0(&gamma0)?;
        Ok(Self::Specified(gamma0))
    }

    /// γ⁰ = (1, …, 1).
    pub fn unit(p: usize) -> Self {
        Self::Specified(vec![1.0; p])
    }

    pub fn is_equal(&self) -> bool {
        matches!(self, NullSpec::Equal)
    }
}

fn validate_gamma0(gamma0: &[f64]) -> Result<()> {
    if gamma0.is_empty() {
        return Err(Error::param("null index vector is empty"));
    }
    if let Some(j) = gamma0.iter().position(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(Error::param(format!("null index γ⁰[{j}] = {} must be positive", gamma0[j])));
    }
    Ok(())
}

/// Which limit law a report was calibrated against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Calibration {
    Gumbel { p: usize },
    ChiSquare { df: usize },
}

/// Outcome of one test run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    /// Gumbel-normalized statistic; for chi-square calibrated tests,
    /// `(statistic - df) / sqrt(2 df)`.
    pub normalized: f64,
    /// Rejection threshold on the statistic scale.
    pub threshold: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub calibration: Calibration,
    pub per_dim_contrib: Vec<f64>,
    pub argmax_dim: usize,
    pub gamma_bar: Option<f64>,
    pub gamma_hat: Vec<f64>,
    pub k: Vec<usize>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// A maximum over per-dimension contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxStatistic {
    pub value: f64,
    pub contribs: Vec<f64>,
    /// Smallest index attaining the maximum.
    pub argmax: usize,
}

impl MaxStatistic {
    pub(crate) fn from_contribs(contribs: Vec<f64>) -> Self {
        let mut argmax = 0;
        for (j, &c) in contribs.iter().enumerate() {
            if c > contribs[argmax] {
                argmax = j;
            }
        }
        Self { value: contribs[argmax], contribs, argmax }
    }
}

/// T = max_j k_j (γ̂_j / γ⁰_j - 1)².
pub fn statistic_t(estimates: &HillEstimates, gamma0: &[f64]) -> Result<MaxStatistic> {
    validate_gamma0(gamma0)?;
    if gamma0.len() != estimates.p() {
        return Err(Error::param(format!(
            "null index vector has length {}, expected p = {}",
            gamma0.len(),
            estimates.p()
        )));
    }
    let contribs = estimates
        .gamma_hat
        .iter()
        .zip(gamma0)
        .zip(estimates.k_choice.per_dim())
        .map(|((&g, &g0), &k)| {
            let r = g / g0 - 1.0;
            k as f64 * (r * r)
        })
        .collect();
    Ok(MaxStatistic::from_contribs(contribs))
}

/// γ̄ = (1/p) Σ γ̂_j.
pub fn gamma_bar(estimates: &HillEstimates) -> Result<f64> {
    let g = estimates.gamma_hat.iter().sum::<f64>() / estimates.p() as f64;
    if !(g > 0.0) {
        return Err(Error::domain("all Hill estimates degenerate"));
    }
    Ok(g)
}

/// T* = max_j k_j (γ̂_j / γ̄ - 1)²; returns the statistic and γ̄.
pub fn statistic_t_star(estimates: &HillEstimates) -> Result<(MaxStatistic, f64)> {
    let g = gamma_bar(estimates)?;
    let stat = statistic_t(estimates, &vec![g; estimates.p()])?;
    Ok((stat, g))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelCalibration {
    pub normalized: f64,
    pub p_value: f64,
    pub threshold: f64,
    pub reject: bool,
}

fn check_p(p: usize) -> Result<f64> {
    if p < 2 {
        return Err(Error::param("max-test calibration requires p ≥ 2"));
    }
    Ok(p as f64)
}

/// 2 log p - log log p + q_α.
pub fn rejection_threshold(p: usize, alpha: Probability) -> Result<f64> {
    let pf = check_p(p)?;
    Ok(2.0 * pf.ln() - pf.ln().ln() + gumbel_test_quantile(alpha.value())?)
}

/// Normalizes a max statistic, computes its limit p-value and decides.
///
/// The decision is taken on the threshold scale (`statistic >= threshold`);
/// `p_value <= alpha` agrees with it except within rounding of the boundary.
pub fn calibrate(statistic: f64, p: usize, alpha: Probability) -> Result<GumbelCalibration> {
    let pf = check_p(p)?;
    if !(statistic >= 0.0) {
        return Err(Error::param(format!("max statistic must be non-negative, got {statistic}")));
    }
    let threshold = rejection_threshold(p, alpha)?;
    let normalized = statistic - 2.0 * pf.ln() + pf.ln().ln();
    Ok(GumbelCalibration {
        normalized,
        p_value: gumbel_limit_sf(normalized),
        threshold,
        reject: statistic >= threshold,
    })
}

/// Packs a max statistic into a calibrated report.
pub(crate) fn max_report(
    test: &str,
    stat: MaxStatistic,
    gamma_bar: Option<f64>,
    estimates: &HillEstimates,
    alpha: Probability,
) -> Result<TestReport> {
    let p = estimates.p();
    let cal = calibrate(stat.value, p, alpha)?;
    Ok(TestReport {
        test: test.to_string(),
        statistic: stat.value,
        normalized: cal.normalized,
        threshold: cal.threshold,
        p_value: cal.p_value,
        reject: cal.reject,
        alpha: alpha.value(),
        calibration: Calibration::Gumbel { p },
        per_dim_contrib: stat.contribs,
        argmax_dim: stat.argmax,
        gamma_bar,
        gamma_hat: estimates.gamma_hat.clone(),
        k: estimates.k_choice.per_dim().to_vec(),
        warnings: estimate_warnings(estimates),
    })
}

pub(crate) fn estimate_warnings(estimates: &HillEstimates) -> Vec<String> {
    let mut warnings = Vec::new();
    let degenerate = estimates.degenerate_dims();
    if !degenerate.is_empty() {
        warnings.push(format!("degenerate (zero) Hill estimates in dimensions {degenerate:?}"));
    }
    let k_min = estimates.k_choice.per_dim().iter().copied().min().unwrap_or(0);
    warnings.extend(dimension_warning(k_min, estimates.p()));
    warnings
}

/// T or T* from precomputed Hill estimates.
pub fn max_test_from_estimates(estimates: &HillEstimates, null: &NullSpec, alpha: Probability) -> Result<TestReport> {
    match null {
        NullSpec::Specified(g0) => max_report("T", statistic_t(estimates, g0)?, None, estimates, alpha),
        NullSpec::Equal => {
            let (stat, g) = statistic_t_star(estimates)?;
            max_report("T*", stat, Some(g), estimates, alpha)
        }
    }
}

/// Hill estimation followed by T (specified null) or T* (equal indices).
pub fn run_max_test(data: &DataMatrix, ks: &KChoice, null: &NullSpec, alpha: Probability) -> Result<TestReport> {
    let estimates = hill_estimates(data, ks)?;
    max_test_from_estimates(&estimates, null, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn est(gamma_hat: Vec<f64>, ks: Vec<usize>) -> HillEstimates {
        HillEstimates::from_parts(gamma_hat, KChoice::per_dimension(ks, 1000).unwrap()).unwrap()
    }

    fn alpha(a: f64) -> Probability {
        Probability::new(a).unwrap()
    }

    #[test]
    fn statistic_t_examples() {
        let s = statistic_t(&est(vec![1.0, 2.0], vec![10, 10]), &[1.0, 2.0]).unwrap();
        assert_eq!(s.value, 0.0);
        let s = statistic_t(&est(vec![1.2], vec![100]), &[1.0]).unwrap();
        assert!((s.value - 4.0).abs() < 1e-12);
        let s = statistic_t(&est(vec![1.1, 1.1], vec![50, 200]), &[1.0, 1.0]).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
        assert_eq!(s.argmax, 1);
    }

    #[test]
    fn statistic_t_rejects_bad_null() {
        let e = est(vec![1.0, 1.0], vec![10, 10]);
        assert!(statistic_t(&e, &[1.0]).is_err());
        assert!(statistic_t(&e, &[1.0, 0.0]).is_err());
        assert!(NullSpec::specified(vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn zero_estimate_contributes_k() {
        let s = statistic_t(&est(vec![0.0, 1.0], vec![30, 10]), &[2.0, 1.0]).unwrap();
        assert_eq!(s.contribs, vec![30.0, 0.0]);
    }

    #[test]
    fn ties_report_smallest_index() {
        let s = statistic_t(&est(vec![1.5, 0.5, 1.5], vec![10, 10, 10]), &[1.0; 3]).unwrap();
        assert_eq!(s.argmax, 0);
    }

    #[test]
    fn statistic_t_star_examples() {
        let (s, g) = statistic_t_star(&est(vec![0.7; 4], vec![20; 4])).unwrap();
        assert_eq!((s.value, g), (0.0, 0.7));
        let (s, g) = statistic_t_star(&est(vec![1.0, 1.0, 1.3], vec![100; 3])).unwrap();
        assert!((g - 1.1).abs() < 1e-15);
        assert!((s.value - 3.305_785_123_966_942).abs() < 1e-10);
        assert_eq!(s.argmax, 2);
        assert!(matches!(statistic_t_star(&est(vec![0.0; 3], vec![5; 3])), Err(Error::Domain(_))));
    }

    #[test]
    fn calibration_examples() {
        let a = alpha(0.05);
        let thr = rejection_threshold(50, a).unwrap();
        assert!((thr - 11.255_651_990_202_775).abs() < 1e-12);

        let p = 37;
        let boundary = rejection_threshold(p, a).unwrap();
        let cal = calibrate(boundary, p, a).unwrap();
        assert!(cal.reject);
        assert!((cal.p_value - 0.05).abs() < 1e-12);

        let cal = calibrate(0.0, 100, a).unwrap();
        assert!((cal.normalized + 7.683_160_746_168_282).abs() < 1e-12);
        assert!(cal.p_value > 1.0 - 1e-10);
        assert!(!cal.reject);

        assert!(calibrate(1.0, 2, a).is_ok());
        let err = calibrate(1.0, 1, a).unwrap_err();
        assert!(err.to_string().contains("requires p ≥ 2"));
    }

    #[test]
    fn report_invariants() {
        let e = est(vec![1.0, 1.4, 0.9], vec![100; 3]);
        let r = max_test_from_estimates(&e, &NullSpec::unit(3), alpha(0.05)).unwrap();
        assert_eq!(r.test, "T");
        assert_eq!(r.statistic, r.per_dim_contrib.iter().cloned().fold(0.0, f64::max));
        assert_eq!(r.argmax_dim, 1);
        assert!(r.gamma_bar.is_none());
        assert_eq!(r.reject, r.statistic >= r.threshold);
        let r = max_test_from_estimates(&e, &NullSpec::Equal, alpha(0.05)).unwrap();
        assert_eq!(r.test, "T*");
        assert!(r.gamma_bar.is_some());
    }

    #[test]
    fn monotone_in_argmax_deviation() {
        let base = est(vec![1.3, 1.1, 0.95], vec![50, 60, 70]);
        let t0 = statistic_t(&base, &[1.0; 3]).unwrap().value;
        for bump in [0.01, 0.1, 0.5] {
            let e = est(vec![1.3 + bump, 1.1, 0.95], vec![50, 60, 70]);
            assert!(statistic_t(&e, &[1.0; 3]).unwrap().value >= t0);
        }
    }

    proptest! {
        #[test]
        fn permutation_invariance(
            g in prop::collection::vec(0.2f64..3.0, 2..12),
            seed in 0u64..1000,
        ) {
            let p = g.len();
            let ks: Vec<usize> = (0..p).map(|j| 20 + (j * 7 + seed as usize) % 40).collect();
            let g0: Vec<f64> = (0..p).map(|j| 0.5 + ((j as u64 * 13 + seed) % 10) as f64 / 10.0).collect();
            let mut order: Vec<usize> = (0..p).collect();
            order.rotate_left(seed as usize % p);
            order.swap(0, p - 1);
            let e = est(g.clone(), ks.clone());
            let ep = est(order.iter().map(|&j| g[j]).collect(), order.iter().map(|&j| ks[j]).collect());
            let g0p: Vec<f64> = order.iter().map(|&j| g0[j]).collect();
            let t = statistic_t(&e, &g0).unwrap();
            let tp = statistic_t(&ep, &g0p).unwrap();
            prop_assert_eq!(t.value, tp.value);
            prop_assert_eq!(t.contribs[order[tp.argmax]], t.value);
            let (ts, _) = statistic_t_star(&e).unwrap();
            let (tsp, _) = statistic_t_star(&ep).unwrap();
            prop_assert!((ts.value - tsp.value).abs() <= 1e-12 * ts.value.max(1.0));
        }

        #[test]
        fn t_star_scale_invariant(g in prop::collection::vec(0.2f64..3.0, 2..12), c in 0.01f64..100.0) {
            let p = g.len();
            let e = est(g.clone(), vec![40; p]);
            let es = est(g.iter().map(|x| x * c).collect(), vec![40; p]);
            let (a, _) = statistic_t_star(&e).unwrap();
            let (b, _) = statistic_t_star(&es).unwrap();
            prop_assert!((a.value - b.value).abs() <= 1e-9 * a.value.max(1.0));
            // argmax is only stable away from (near-)ties
            let mut sorted = a.contribs.clone();
            sorted.sort_by(|x, y| y.total_cmp(x));
            if sorted[0] - sorted[1] > 1e-9 * sorted[0] {
                prop_assert_eq!(a.argmax, b.argmax);
            }
        }

        #[test]
        fn t_nonnegative_and_zero_only_at_null(g in prop::collection::vec(0.0f64..3.0, 2..12)) {
            let p = g.len();
            let e = est(g.clone(), vec![25; p]);
            let t = statistic_t(&e, &vec![1.0; p]).unwrap().value;
            prop_assert!(t >= 0.0);
            prop_assert_eq!(t == 0.0, g.iter().all(|&x| x == 1.0));
        }
    }
}
