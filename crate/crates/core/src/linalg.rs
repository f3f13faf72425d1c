//! Dense square matrices and the Cholesky routines the GP needs.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += v;
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1))
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    l: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotPositiveDefinite {
    pub pivot: usize,
}

impl Cholesky {
    /// Factor a symmetric matrix; only the lower triangle is read.
    pub fn factor(a: &Matrix) -> Result<Self, NotPositiveDefinite> {
        let n = a.dim();
        let mut l = Matrix::zeros(n);
        for j in 0..n {
            let lj = &l.data[j * n..j * n + j];
            let mut d = a.get(j, j) - lj.iter().map(|x| x * x).sum::<f64>();
            if !(d > 0.0) || !d.is_finite() {
                return Err(NotPositiveDefinite { pivot: j });
            }
            d = math::sqrt(d);
            l.data[j * n + j] = d;
            for i in j + 1..n {
                let (head, tail) = l.data.split_at_mut(i * n);
                let li = &tail[..j];
                let lj = &head[j * n..j * n + j];
                let s: f64 = li.iter().zip(lj).map(|(x, y)| x * y).sum();
                tail[j] = (a.get(i, j) - s) / d;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.dim()
    }

    pub fn factor_matrix(&self) -> &Matrix {
        &self.l
    }

    /// Solve `L x = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.dim();
        let mut x = b.to_vec();
        for i in 0..n {
            let row = &self.l.data[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / self.l.data[i * n + i];
        }
        x
    }

    /// Solve `Lᵀ x = b`.
    pub fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.dim();
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            x[i] /= self.l.data[i * n + i];
            let xi = x[i];
            for k in 0..i {
                x[k] -= self.l.data[i * n + k] * xi;
            }
        }
        x
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `log |A|`.
    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|i| math::ln(self.l.get(i, i))).sum::<f64>() * 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn factor_and_solve() {
        let a = Matrix::from_fn(3, |i, j| [[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]][i][j]);
        let c = Cholesky::factor(&a).unwrap();
        let l = c.factor_matrix();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| l.get(i, k) * l.get(j, k)).sum();
                assert_relative_eq!(s, a.get(i, j), epsilon = 1e-12);
            }
        }
        let b = [1.0, -2.0, 0.5];
        let x = c.solve(&b);
        for i in 0..3 {
            let ax: f64 = (0..3).map(|j| a.get(i, j) * x[j]).sum();
            assert_relative_eq!(ax, b[i], epsilon = 1e-12);
        }
        // det = 4(15-1) - 2(6-0.6) + 0.6(2-3) = 56 - 10.8 - 0.6
        assert_relative_eq!(c.log_det(), math::ln(44.6), epsilon = 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let a = Matrix::from_fn(2, |i, j| if i == j { 1.0 } else { 2.0 });
        assert_eq!(Cholesky::factor(&a).unwrap_err(), NotPositiveDefinite { pivot: 1 });
    }
}
