//! Symmetric matrices whose only nonzero bands are the main diagonal and the
//! second off-diagonals. Even and odd indices decouple into two tridiagonal
//! systems, which is what the Legendre–Dirichlet basis produces.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SkipBanded {
    diag: Vec<f64>,
    /// `off[k]` couples `k` and `k + 2`.
    off: Vec<f64>,
}

impl SkipBanded {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len(), diag.len().saturating_sub(2));
        Self { diag, off }
    }

    pub fn diagonal(diag: Vec<f64>) -> Self {
        let n = diag.len().saturating_sub(2);
        Self {
            diag,
            off: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        match hi - lo {
            0 => self.diag[lo],
            2 => self.off[lo],
            _ => 0.0,
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &SkipBanded, b: f64) -> SkipBanded {
        assert_eq!(self.dim(), other.dim());
        let diag = self
            .diag
            .iter()
            .zip(&other.diag)
            .map(|(x, y)| a * x + b * y)
            .collect();
        let off = self
            .off
            .iter()
            .zip(&other.off)
            .map(|(x, y)| a * x + b * y)
            .collect();
        SkipBanded { diag, off }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        for k in 0..n {
            y[k] = self.diag[k] * x[k];
        }
        for (k, &o) in self.off.iter().enumerate() {
            y[k] += o * x[k + 2];
            y[k + 2] += o * x[k];
        }
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.dim() {
            s += self.diag[k] * x[k] * x[k];
        }
        for (k, &o) in self.off.iter().enumerate() {
            s += 2.0 * o * x[k] * x[k + 2];
        }
        s
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// LDLᵀ factorization; fails on a non-positive pivot.
    pub fn factor(&self) -> Result<SkipBandedFactor> {
        let n = self.dim();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; self.off.len()];
        for k in 0..n {
            let mut pivot = self.diag[k];
            if k >= 2 {
                pivot -= l[k - 2] * l[k - 2] * d[k - 2];
            }
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::Singular(k));
            }
            d[k] = pivot;
            if k + 2 < n {
                l[k] = self.off[k] / pivot;
            }
        }
        Ok(SkipBandedFactor { d, l })
    }
}

#[derive(Debug, Clone)]
pub struct SkipBandedFactor {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl SkipBandedFactor {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.d.len();
        assert_eq!(x.len(), n);
        for k in 2..n {
            x[k] -= self.l[k - 2] * x[k - 2];
        }
        for k in 0..n {
            x[k] /= self.d[k];
        }
        for k in (0..n.saturating_sub(2)).rev() {
            x[k] -= self.l[k] * x[k + 2];
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> SkipBanded {
        let diag = (0..n).map(|k| 3.0 + k as f64).collect();
        let off = (0..n - 2).map(|k| -0.7 - 0.1 * k as f64).collect();
        SkipBanded::new(diag, off)
    }

    #[test]
    fn solve_recovers_vector() {
        let a = sample(9);
        let x: Vec<f64> = (0..9).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.mul_vec(&x);
        let y = a.factor().unwrap().solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn dense_matvec_agrees() {
        let a = sample(7);
        let dense = a.to_dense();
        let x: Vec<f64> = (0..7).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let y = a.mul_vec(&x);
        for i in 0..7 {
            let yi: f64 = (0..7).map(|j| dense[i][j] * x[j]).sum();
            assert!((yi - y[i]).abs() < 1e-14);
            assert_eq!(dense[i][j_sym(i)], dense[j_sym(i)][i]);
        }
        assert!(
            (a.quadratic_form(&x) - x.iter().zip(&y).map(|(p, q)| p * q).sum::<f64>()).abs()
                < 1e-13
        );
    }

    fn j_sym(i: usize) -> usize {
        (i + 2) % 7
    }

    #[test]
    fn indefinite_rejected() {
        let a = SkipBanded::new(vec![1.0, 1.0, 1.0], vec![2.0]);
        assert!(matches!(a.factor(), Err(Error::Singular(2))));
    }
}
