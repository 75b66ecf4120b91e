use crate::error::{Error, Result};

/// The `k + 1` largest values of a sample of size `n`, in weakly descending
/// order: `values[0]` is the maximum `X_{n,n}` and `values[k]` is the
/// tail threshold `X_{n-k,n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopOrderStats {
    values: Vec<f64>,
    k: usize,
    n: usize,
}

impl TopOrderStats {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `X_{n-k,n}`, the (n-k)-th smallest observation.
    pub fn threshold(&self) -> f64 {
        self.values[self.k]
    }

    /// The top `k` observations `X_{n,n}, …, X_{n-k+1,n}`.
    pub fn exceedances(&self) -> &[f64] {
        &self.values[..self.k]
    }
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("empty sample"));
    }
    if k < 1 || k >= n {
        return Err(Error::param(format!("k must satisfy 1 <= k <= n-1 (k={k}, n={n})")));
    }
    Ok(())
}

/// Extracts the `k + 1` largest values of `sample`.
///
/// Selection is a partition followed by a sort of the retained block, which
/// yields exactly the values a full sort would place at those ranks.
pub fn top_order_statistics(sample: &[f64], k: usize) -> Result<TopOrderStats> {
    let n = sample.len();
    check_k(k, n)?;
    if sample.iter().any(|v| v.is_nan()) {
        return Err(Error::param("sample contains NaN"));
    }
    let mut buf = sample.to_vec();
    let cut = n - k - 1;
    buf.select_nth_unstable_by(cut, f64::total_cmp);
    let mut values = buf.split_off(cut);
    values.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(TopOrderStats { values, k, n })
}
