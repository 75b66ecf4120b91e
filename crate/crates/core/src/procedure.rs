//! Named test procedures and a runner that shares Hill estimates and Σ̃
//! across several tests on the same sample.
//!
//! Labels: `T`, `T*`, `T_W`, `T*_W`, `T_Omega(source)`, `T*_Omega(source)`,
//! where source is `identity`, `model`, `r` (inverted Σ̃) or `file`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::DataMatrix;
use crate::dependence::{
    approx_omega_from_r, omega_test_from_estimates, tail_dependence_matrix, wald_test_from_estimates,
    PrecisionMatrix, TailDepMatrix,
};
use crate::error::{Error, Result};
use crate::hill::{hill_estimates, HillEstimates, KChoice};
use crate::maxtest::{max_test_from_estimates, NullSpec, TestReport};
use crate::numerics::Probability;

/// Where the weight matrix of T_Ω comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OmegaSource {
    Identity,
    /// Inverse of the simulation model's R(1,1); only meaningful for simulated data.
    Model,
    /// (Σ̃ + ridge·I)⁻¹ from the sample itself.
    EstimatedR,
    /// Supplied by the caller.
    File,
}

impl OmegaSource {
    fn as_str(self) -> &'static str {
        match self {
            OmegaSource::Identity => "identity",
            OmegaSource::Model => "model",
            OmegaSource::EstimatedR => "r",
            OmegaSource::File => "file",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Max,
    Wald,
    Omega(OmegaSource),
}

/// A test family plus whether it targets equal indices (starred form).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TestSpec {
    pub family: Family,
    pub equal: bool,
}

impl TestSpec {
    pub const T: TestSpec = TestSpec { family: Family::Max, equal: false };
    pub const T_STAR: TestSpec = TestSpec { family: Family::Max, equal: true };
    pub const T_W: TestSpec = TestSpec { family: Family::Wald, equal: false };
    pub const T_STAR_W: TestSpec = TestSpec { family: Family::Wald, equal: true };

    pub fn omega(source: OmegaSource, equal: bool) -> Self {
        TestSpec { family: Family::Omega(source), equal }
    }

    pub fn with_equal(self, equal: bool) -> Self {
        TestSpec { equal, ..self }
    }

    /// The label without the Ω source, e.g. `T_Omega`.
    pub fn family_label(&self) -> String {
        let star = if self.equal { "*" } else { "" };
        match self.family {
            Family::Max => format!("T{star}"),
            Family::Wald => format!("T{star}_W"),
            Family::Omega(_) => format!("T{star}_Omega"),
        }
    }

    pub fn needs_sigma(&self) -> bool {
        matches!(self.family, Family::Wald | Family::Omega(OmegaSource::EstimatedR))
    }
}

impl fmt::Display for TestSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Omega(src) => write!(f, "{}({})", self.family_label(), src.as_str()),
            _ => f.write_str(&self.family_label()),
        }
    }
}

impl FromStr for TestSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(s[i + 1..s.len() - 1].trim())),
            Some(_) => return Err(Error::param(format!("unbalanced parentheses in test label '{s}'"))),
            None => (s, None),
        };
        let head_l = head.to_ascii_lowercase().replace('Ω', "omega");
        let (equal, rest) = match head_l.strip_prefix("t*") {
            Some(r) => (true, r),
            None => match head_l.strip_prefix('t') {
                Some(r) => (false, r),
                None => return Err(Error::param(format!("unknown test '{s}'"))),
            },
        };
        let family = match (rest, arg) {
            ("", None) => Family::Max,
            ("_w", None) => Family::Wald,
            ("_omega", arg) => Family::Omega(match arg.map(str::to_ascii_lowercase).as_deref() {
                None | Some("model") => OmegaSource::Model,
                Some("identity") | Some("i") => OmegaSource::Identity,
                Some("r") | Some("estimated") => OmegaSource::EstimatedR,
                Some("file") => OmegaSource::File,
                Some(other) => return Err(Error::param(format!("unknown Ω source '{other}'"))),
            }),
            _ => {
                return Err(Error::param(format!(
                    "unknown test '{s}' (expected T, T*, T_W, T*_W or T_Omega(source))"
                )))
            }
        };
        Ok(TestSpec { family, equal })
    }
}

impl Serialize for TestSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TestSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a comma-separated list of labels; commas inside parentheses are kept.
pub fn parse_test_list(s: &str) -> Result<Vec<TestSpec>> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(s[start..i].parse()?);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !s[start..].trim().is_empty() {
        out.push(s[start..].parse()?);
    }
    if out.is_empty() {
        return Err(Error::param("empty test list"));
    }
    Ok(out)
}

/// Inputs shared by every test in one run.
#[derive(Debug, Clone, Default)]
pub struct TestContext {
    pub alpha: Probability,
    /// Added to the diagonal of Σ̃ before inversion.
    pub ridge: f64,
    /// Ω for `T_Omega(file)`.
    pub supplied_omega: Option<PrecisionMatrix>,
    /// Ω for `T_Omega(model)`.
    pub model_omega: Option<PrecisionMatrix>,
}

impl TestContext {
    pub fn new(alpha: Probability) -> Self {
        Self { alpha, ..Self::default() }
    }
}

/// Runs `spec` on precomputed estimates. `sigma` is required by Wald and
/// `T_Omega(r)`; `gamma0` by unstarred tests.
pub fn run_on_estimates(
    spec: &TestSpec,
    estimates: &HillEstimates,
    sigma: Option<&TailDepMatrix>,
    gamma0: Option<&[f64]>,
    ctx: &TestContext,
) -> Result<TestReport> {
    let null = if spec.equal {
        NullSpec::Equal
    } else {
        let g0 = gamma0.ok_or_else(|| Error::param(format!("{spec} needs null indices γ⁰")))?;
        NullSpec::specified(g0.to_vec())?
    };
    let need_sigma = || sigma.ok_or_else(|| Error::param(format!("{spec} needs the tail-dependence matrix")));
    let p = estimates.p();
    match spec.family {
        Family::Max => max_test_from_estimates(estimates, &null, ctx.alpha),
        Family::Wald => wald_test_from_estimates(estimates, need_sigma()?, &null, ctx.alpha, ctx.ridge),
        Family::Omega(src) => {
            let estimated;
            let identity;
            let omega = match src {
                OmegaSource::Identity => {
                    identity = PrecisionMatrix::identity(p);
                    &identity
                }
                OmegaSource::EstimatedR => {
                    estimated = approx_omega_from_r(need_sigma()?, ctx.ridge)?;
                    &estimated
                }
                OmegaSource::Model => ctx
                    .model_omega
                    .as_ref()
                    .ok_or_else(|| Error::param("T_Omega(model) is only available for simulated data"))?,
                OmegaSource::File => ctx
                    .supplied_omega
                    .as_ref()
                    .ok_or_else(|| Error::param("T_Omega(file) needs a supplied Ω"))?,
            };
            let mut report = omega_test_from_estimates(estimates, omega, &null, ctx.alpha)?;
            report.test = spec.to_string();
            Ok(report)
        }
    }
}

/// Runs several tests at a uniform k, estimating γ̂ once and Σ̃ at most once.
/// Each test succeeds or fails independently.
pub fn run_tests(
    data: &DataMatrix,
    k: usize,
    specs: &[TestSpec],
    gamma0: Option<&[f64]>,
    ctx: &TestContext,
) -> Result<Vec<Result<TestReport>>> {
    let ks = KChoice::uniform(k, data.p(), data.n())?;
    let estimates = hill_estimates(data, &ks)?;
    let sigma = if specs.iter().any(TestSpec::needs_sigma) {
        Some(tail_dependence_matrix(data, k)?)
    } else {
        None
    };
    Ok(specs.iter().map(|s| run_on_estimates(s, &estimates, sigma.as_ref(), gamma0, ctx)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxtest::run_max_test;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pareto(n: usize, p: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = (0..p).map(|_| (0..n).map(|_| 1.0 / (1.0 - rng.random::<f64>())).collect()).collect();
        DataMatrix::from_columns(cols).unwrap()
    }

    #[test]
    fn labels_round_trip() {
        for s in ["T", "T*", "T_W", "T*_W", "T_Omega(model)", "T*_Omega(r)", "T_Omega(identity)", "T_Omega(file)"] {
            let spec: TestSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert_eq!("t_omega".parse::<TestSpec>().unwrap(), TestSpec::omega(OmegaSource::Model, false));
        assert_eq!("T_Ω(I)".parse::<TestSpec>().unwrap(), TestSpec::omega(OmegaSource::Identity, false));
        assert!("T_X".parse::<TestSpec>().is_err());
        assert!("T_Omega(foo)".parse::<TestSpec>().is_err());
        assert!("W".parse::<TestSpec>().is_err());
    }

    #[test]
    fn test_lists() {
        let l = parse_test_list("T, T_W ,T_Omega(r)").unwrap();
        assert_eq!(l, vec![TestSpec::T, TestSpec::T_W, TestSpec::omega(OmegaSource::EstimatedR, false)]);
        assert!(parse_test_list(" ").is_err());
        let json = serde_json::to_string(&l).unwrap();
        assert_eq!(json, r#"["T","T_W","T_Omega(r)"]"#);
        assert_eq!(serde_json::from_str::<Vec<TestSpec>>(&json).unwrap(), l);
    }

    #[test]
    fn runner_matches_direct_calls() {
        let data = pareto(400, 6, 3);
        let ones = vec![1.0; 6];
        let ctx = TestContext::new(Probability::new(0.05).unwrap());
        let specs = [TestSpec::T, TestSpec::T_STAR, TestSpec::omega(OmegaSource::Identity, false), TestSpec::T_W];
        let out = run_tests(&data, 40, &specs, Some(&ones), &ctx).unwrap();
        let ks = KChoice::uniform(40, 6, 400).unwrap();
        let direct = run_max_test(&data, &ks, &NullSpec::unit(6), ctx.alpha).unwrap();
        assert_eq!(out[0].as_ref().unwrap(), &direct);
        let om = out[2].as_ref().unwrap();
        assert_eq!(om.statistic, direct.statistic);
        assert_eq!(om.test, "T_Omega(identity)");
        assert_eq!(out[1].as_ref().unwrap().test, "T*");
        assert_eq!(out[3].as_ref().unwrap().test, "T_W");
    }

    #[test]
    fn missing_inputs_fail_individually() {
        let data = pareto(200, 3, 4);
        let ctx = TestContext::new(Probability::default());
        let specs = [TestSpec::T, TestSpec::T_STAR, TestSpec::omega(OmegaSource::Model, true)];
        let out = run_tests(&data, 20, &specs, None, &ctx).unwrap();
        assert!(matches!(out[0], Err(Error::Parameter(_))));
        assert!(out[1].is_ok());
        assert!(matches!(out[2], Err(Error::Parameter(_))));
    }
}
