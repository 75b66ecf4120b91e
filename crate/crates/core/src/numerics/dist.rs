//! Distribution functions and quantiles.
//!
//! Tail probabilities are exposed directly (`*_sf`) so that callers working
//! in the far upper tail do not lose precision to `1 - cdf`.

use std::f64::consts::{FRAC_1_PI, PI, SQRT_2};

use super::root::solve_increasing;
use super::special::{erfc, gamma_p, gamma_q, ln_beta, ln_gamma, beta_reg_with_ln_beta};
use crate::error::{Error, Result};

const QUANTILE_X_TOL: f64 = 1e-15;

fn open_unit(u: f64, what: &str) -> Result<()> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::param(format!("{what} requires a probability in (0, 1), got {u}")));
    }
    Ok(())
}

/// Student-t distribution with arbitrary positive real degrees of freedom.
#[derive(Debug, Clone, Copy)]
pub struct StudentT {
    df: f64,
    ln_beta: f64,
    ln_pdf_norm: f64,
}

impl StudentT {
    pub fn new(df: f64) -> Result<Self> {
        if !(df > 0.0 && df.is_finite()) {
            return Err(Error::param(format!("Student-t degrees of freedom must be positive, got {df}")));
        }
        let ln_beta = ln_beta(0.5 * df, 0.5);
        Ok(Self { df, ln_beta, ln_pdf_norm: -0.5 * df.ln() - ln_beta })
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn pdf(&self, x: f64) -> f64 {
        (self.ln_pdf_norm - 0.5 * (self.df + 1.0) * (x * x / self.df).ln_1p()).exp()
    }

    /// P(|T| > |x|) / 2, the one-sided tail mass beyond |x|.
    fn tail(&self, x: f64) -> f64 {
        if x.is_infinite() {
            return 0.0;
        }
        let t = x.abs() / self.df.sqrt();
        // x2 = ν / (ν + x²), y2 = 1 - x2, formed without cancellation
        let (x2, y2) = if t > 1.0 {
            let r = 1.0 / t;
            let r2 = r * r;
            (r2 / (1.0 + r2), 1.0 / (1.0 + r2))
        } else {
            let t2 = t * t;
            (1.0 / (1.0 + t2), t2 / (1.0 + t2))
        };
        0.5 * beta_reg_with_ln_beta(0.5 * self.df, 0.5, x2, y2, self.ln_beta)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x > 0.0 {
            1.0 - self.tail(x)
        } else {
            self.tail(x)
        }
    }

    pub fn sf(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.tail(x)
        } else {
            1.0 - self.tail(x)
        }
    }

    /// The non-negative `x` with `sf(x) = s`, for `0 < s <= 1/2`.
    pub fn upper_quantile(&self, s: f64) -> f64 {
        debug_assert!(s > 0.0 && s <= 0.5);
        if s == 0.5 {
            return 0.0;
        }
        if self.df == 1.0 {
            return 1.0 / (PI * s).tan();
        }
        if self.df == 2.0 {
            return (1.0 - 2.0 * s) * SQRT_2 / (2.0 * (s * (1.0 - s)).sqrt());
        }
        if s < 0.25 {
            self.upper_quantile_log(s)
        } else {
            self.upper_quantile_linear(s)
        }
    }

    // Power-law tail: ln sf is nearly linear in ln x, so Newton runs on ln x.
    fn upper_quantile_log(&self, s: f64) -> f64 {
        let nu = self.df;
        let ln_c = self.ln_pdf_norm + 0.5 * (nu + 1.0) * nu.ln() - nu.ln();
        let ln_s = s.ln();
        let start = (ln_c - ln_s) / nu;
        let g = |t: f64| {
            let x = t.exp();
            let sf = self.tail(x);
            (ln_s - sf.ln(), self.pdf(x) * x / sf)
        };
        // sf(x) > s at x=0 (sf = 1/2); walk up until the sign flips
        let mut lo = start.min(0.0) - 1.0;
        while g(lo).0 > 0.0 {
            lo -= 2.0;
        }
        let mut hi = start.max(lo) + 1.0;
        while g(hi).0 < 0.0 {
            lo = hi;
            hi += 2.0;
        }
        solve_increasing(g, lo, hi, start, QUANTILE_X_TOL).exp()
    }

    fn upper_quantile_linear(&self, s: f64) -> f64 {
        let mut hi = 1.0;
        while self.tail(hi) > s {
            hi *= 2.0;
        }
        solve_increasing(|x| (s - self.tail(x), self.pdf(x)), 0.0, hi, 0.5 * hi, QUANTILE_X_TOL)
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        open_unit(u, "Student-t quantile")?;
        Ok(if u == 0.5 {
            0.0
        } else if u < 0.5 {
            -self.upper_quantile(u)
        } else {
            self.upper_quantile(1.0 - u)
        })
    }
}

pub fn student_t_cdf(x: f64, df: f64) -> Result<f64> {
    let dist = StudentT::new(df)?;
    if x.is_nan() {
        return Err(Error::param("Student-t CDF argument is NaN"));
    }
    Ok(dist.cdf(x))
}

pub fn student_t_quantile(u: f64, df: f64) -> Result<f64> {
    StudentT::new(df)?.quantile(u)
}

/// Standard Cauchy survival function, exact in the upper tail.
pub fn cauchy_sf(x: f64) -> f64 {
    if x > 0.0 {
        (1.0 / x).atan() * FRAC_1_PI
    } else {
        0.5 + (-x).atan() * FRAC_1_PI
    }
}

pub fn cauchy_cdf(x: f64) -> f64 {
    cauchy_sf(-x)
}

fn check_chi_df(df: usize) -> Result<f64> {
    if df < 1 {
        return Err(Error::param("chi-square degrees of freedom must be at least 1"));
    }
    Ok(df as f64)
}

pub fn chi_square_cdf(x: f64, df: usize) -> Result<f64> {
    let k = check_chi_df(df)?;
    Ok(gamma_p(0.5 * k, 0.5 * x))
}

pub fn chi_square_sf(x: f64, df: usize) -> Result<f64> {
    let k = check_chi_df(df)?;
    Ok(gamma_q(0.5 * k, 0.5 * x))
}

pub fn chi_square_quantile(u: f64, df: usize) -> Result<f64> {
    let k = check_chi_df(df)?;
    open_unit(u, "chi-square quantile")?;
    let a = 0.5 * k;
    let ln_norm = -a * 2f64.ln() - ln_gamma(a);
    let density = |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            ((a - 1.0) * x.ln() - 0.5 * x + ln_norm).exp()
        }
    };
    let mut hi = 2.0 * k.max(1.0);
    while gamma_p(a, 0.5 * hi) < u {
        hi *= 2.0;
    }
    Ok(solve_increasing(|x| (gamma_p(a, 0.5 * x) - u, density(x)), 0.0, hi, k, QUANTILE_X_TOL))
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn normal_quantile(u: f64) -> Result<f64> {
    open_unit(u, "normal quantile")?;
    if u == 0.5 {
        return Ok(0.0);
    }
    // solve on the lower tail for precision, then mirror
    let s = u.min(1.0 - u);
    let mut lo = -1.0;
    while normal_cdf(lo) > s {
        lo *= 2.0;
    }
    let z = solve_increasing(|x| (normal_cdf(x) - s, normal_pdf(x)), lo, 0.0, 0.5 * lo, QUANTILE_X_TOL);
    Ok(if u < 0.5 { z } else { -z })
}

/// Unit Fréchet CDF exp(-1/x); zero for x <= 0.
pub fn frechet1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// 1 - exp(-1/x) without cancellation.
pub fn frechet1_sf(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        -(-1.0 / x).exp_m1()
    }
}

pub fn frechet1_quantile(u: f64) -> Result<f64> {
    open_unit(u, "Fréchet quantile")?;
    Ok(-1.0 / u.ln())
}

const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Limit law of the normalized max statistic: exp(-exp(-x/2)/√π).
pub fn gumbel_limit_cdf(x: f64) -> f64 {
    (-(-0.5 * x).exp() * INV_SQRT_PI).exp()
}

/// 1 - [`gumbel_limit_cdf`], computed without cancellation.
pub fn gumbel_limit_sf(x: f64) -> f64 {
    -(-(-0.5 * x).exp() * INV_SQRT_PI).exp_m1()
}

/// Upper-α quantile of the limit law: -ln π - 2 ln ln(1/(1-α)).
pub fn gumbel_test_quantile(alpha: f64) -> Result<f64> {
    open_unit(alpha, "Gumbel test quantile")?;
    Ok(-PI.ln() - 2.0 * (-(-alpha).ln_1p()).ln())
}
