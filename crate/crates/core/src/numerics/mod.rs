//! Special functions, distribution functions and order-statistic helpers.

mod dist;
mod order;
mod root;
pub mod special;

pub use dist::{
    cauchy_cdf, cauchy_sf, chi_square_cdf, chi_square_quantile, chi_square_sf, frechet1_cdf,
    frechet1_quantile, frechet1_sf, gumbel_limit_cdf, gumbel_limit_sf, gumbel_test_quantile,
    normal_cdf, normal_quantile, student_t_cdf, student_t_quantile, StudentT,
};
pub(crate) use order::check_k;
pub use order::{top_order_statistics, TopOrderStats};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::param(format!("probability must lie in [0, 1], got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl Default for Probability {
    /// The conventional 5% level.
    fn default() -> Self {
        Self(0.05)
    }
}
