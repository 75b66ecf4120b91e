//! Dense Cholesky factorization for the small symmetric systems used by the
//! Wald statistic and the precision-matrix approximation.

use crate::error::{Error, Result};

/// Pivots at or below this value (relative to the largest diagonal entry)
/// are treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Lower-triangular factor `L` with `A = L Lᵀ`, stored row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors the symmetric matrix `a` (row-major, n × n; only the lower
    /// triangle is read).
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n, "matrix buffer does not match dimension");
        let scale = (0..n).map(|i| a[i * n + i].abs()).fold(1.0, f64::max);
        let tol = PIVOT_TOLERANCE * scale;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let row_j = j * n;
            let mut d = a[row_j + j];
            for k in 0..j {
                d -= l[row_j + k] * l[row_j + k];
            }
            if !(d > tol) {
                return Err(Error::Singular { index: j, pivot: d, tolerance: tol });
            }
            let d = d.sqrt();
            l[row_j + j] = d;
            for i in j + 1..n {
                let row_i = i * n;
                let mut s = a[row_i + j];
                for k in 0..j {
                    s -= l[row_i + k] * l[row_j + k];
                }
                l[row_i + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// y = L⁻¹ b
    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / self.l[i * n + i];
        }
        y
    }

    /// x = L⁻ᵀ y
    fn backward(&self, mut y: Vec<f64>) -> Vec<f64> {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = y[i];
            for (k, yk) in y.iter().enumerate().skip(i + 1) {
                s -= self.l[k * n + i] * yk;
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        self.backward(self.forward(b))
    }

    /// bᵀ A⁻¹ b = ‖L⁻¹ b‖², non-negative by construction.
    pub fn quadratic_form(&self, b: &[f64]) -> f64 {
        assert_eq!(b.len(), self.n);
        self.forward(b).iter().map(|v| v * v).sum()
    }

    /// A⁻¹, row-major and exactly symmetric.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in j..n {
                inv[i * n + j] = col[i];
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                inv[i * n + j] = inv[j * n + i];
            }
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let a = [1.0, 0.5, 0.5, 1.0];
        let c = Cholesky::factor(&a, 2).unwrap();
        assert!((c.quadratic_form(&[1.0, 1.0]) - 4.0 / 3.0).abs() < 1e-15);
        let inv = c.inverse();
        let expect = [4.0 / 3.0, -2.0 / 3.0, -2.0 / 3.0, 4.0 / 3.0];
        for (x, y) in inv.iter().zip(expect) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn singular_reports_pivot() {
        let a = [1.0, 1.0, 1.0, 1.0];
        match Cholesky::factor(&a, 2) {
            Err(Error::Singular { index, pivot, .. }) => {
                assert_eq!(index, 1);
                assert!(pivot.abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        assert!(Cholesky::factor(&[-1.0], 1).is_err());
    }

    #[test]
    fn solve_round_trip() {
        // A = B Bᵀ + I for a fixed B
        let n = 6;
        let b: Vec<f64> = (0..n * n).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
            }
        }
        let c = Cholesky::factor(&a, n).unwrap();
        let rhs: Vec<f64> = (0..n).map(|i| i as f64 - 2.5).collect();
        let x = c.solve(&rhs);
        for i in 0..n {
            let ax: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
            assert!((ax - rhs[i]).abs() < 1e-12);
        }
        let q: f64 = rhs.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((c.quadratic_form(&rhs) - q).abs() < 1e-12 * q.abs().max(1.0));
    }
}
