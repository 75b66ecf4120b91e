//! p-values of several tests across a grid of k.

use evindex::maxtest::{NullSpec, TestReport};
use evindex::procedure::{run_tests, TestContext, TestSpec};
use evindex::DataMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub report: Option<TestReport>,
    /// Why the test could not be run at this k; the curve has a gap here.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub test: TestSpec,
    pub points: Vec<SweepPoint>,
}

impl Curve {
    pub fn p_values(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|pt| pt.report.as_ref().map(|r| r.p_value)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub k_grid: Vec<usize>,
    pub alpha: f64,
    pub curves: Vec<Curve>,
}

/// k_min, k_min + step, … up to k_max, requiring 2 ≤ k_min and k_max ≤ n - 1.
pub fn k_grid(k_min: usize, k_max: usize, step: usize, n: usize) -> Result<Vec<usize>> {
    if step == 0 {
        return Err(CliError::usage("k step must be positive"));
    }
    if k_min < 2 {
        return Err(CliError::usage(format!("k_min must be at least 2, got {k_min}")));
    }
    if k_max + 1 > n {
        return Err(CliError::usage(format!("k_max = {k_max} exceeds n - 1 = {}", n.saturating_sub(1))));
    }
    let grid: Vec<usize> = (k_min..=k_max).step_by(step).collect();
    if grid.is_empty() {
        return Err(CliError::usage(format!("empty k grid: k_min = {k_min} > k_max = {k_max}")));
    }
    Ok(grid)
}

/// Runs every test at each k of the grid with k_j = k. The star of each test
/// follows `null`; failures (e.g. singular Σ̃) become gaps.
pub fn sweep_k(
    data: &DataMatrix,
    k_min: usize,
    k_max: usize,
    step: usize,
    null: &NullSpec,
    tests: &[TestSpec],
    ctx: &TestContext,
) -> Result<SweepResult> {
    if tests.is_empty() {
        return Err(CliError::usage("no tests selected"));
    }
    let grid = k_grid(k_min, k_max, step, data.n())?;
    let specs: Vec<TestSpec> = tests.iter().map(|t| t.with_equal(null.is_equal())).collect();
    let gamma0 = match null {
        NullSpec::Specified(g) => Some(g.as_slice()),
        NullSpec::Equal => None,
    };
    let mut curves: Vec<Curve> = specs.iter().map(|&test| Curve { test, points: Vec::new() }).collect();
    for &k in &grid {
        match run_tests(data, k, &specs, gamma0, ctx) {
            Ok(results) => {
                for (curve, res) in curves.iter_mut().zip(results) {
                    curve.points.push(match res {
                        Ok(r) => SweepPoint { k, report: Some(r), error: None },
                        Err(e) => SweepPoint { k, report: None, error: Some(e.to_string()) },
                    });
                }
            }
            Err(e) => {
                for curve in &mut curves {
                    curve.points.push(SweepPoint { k, report: None, error: Some(e.to_string()) });
                }
            }
        }
    }
    Ok(SweepResult { k_grid: grid, alpha: ctx.alpha.value(), curves })
}
