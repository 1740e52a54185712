//! Small dense linear algebra: row-major matrices and a one-sided Jacobi SVD.

use crate::scalar::{lit, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[T]) {
        for (i, x) in v.iter().enumerate() {
            self[(i, j)] = *x;
        }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// A = U·diag(σ)·Vᵀ with σ sorted descending. U is rows×cols, V is cols×cols.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Matrix<T>,
    pub sigma: Vec<T>,
    pub v: Matrix<T>,
}

const MAX_SWEEPS: usize = 60;

/// One-sided Jacobi SVD. Requires rows ≥ cols.
pub fn svd<T: Real>(a: &Matrix<T>) -> Svd<T> {
    assert!(a.rows >= a.cols, "svd needs rows >= cols");
    let (m, n) = (a.rows, a.cols);
    let mut w = a.clone();
    let mut v = Matrix::identity(n);
    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    alpha = alpha + x * x;
                    beta = beta + y * y;
                    gamma = gamma + x * y;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (lit::<T>(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(T, usize)> = (0..n)
        .map(|j| {
            (
                w.column(j)
                    .iter()
                    .fold(T::zero(), |acc, x| acc + *x * *x)
                    .sqrt(),
                j,
            )
        })
        .collect();
    order.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut u = Matrix::zeros(m, n);
    let mut vs = Matrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (dst, &(s, src)) in order.iter().enumerate() {
        sigma.push(s);
        vs.set_column(dst, &v.column(src));
        if s > T::zero() {
            let col: Vec<T> = w.column(src).iter().map(|x| *x / s).collect();
            u.set_column(dst, &col);
        }
    }
    Svd { u, sigma, v: vs }
}

impl<T: Real> Svd<T> {
    /// Minimum-norm least-squares solution of A x = b, dropping singular
    /// values below max(`rcond`·σ_max, `floor`).
    pub fn solve(&self, b: &[T], rcond: T, floor: T) -> Vec<T> {
        let n = self.sigma.len();
        let cutoff = (rcond * self.sigma.first().copied().unwrap_or(T::zero())).max(floor);
        let mut x = vec![T::zero(); n];
        for j in 0..n {
            let s = self.sigma[j];
            if s <= cutoff || s == T::zero() {
                continue;
            }
            let coef = self
                .u
                .column(j)
                .iter()
                .zip(b)
                .fold(T::zero(), |acc, (u, b)| acc + *u * *b)
                / s;
            for i in 0..n {
                x[i] = x[i] + coef * self.v[(i, j)];
            }
        }
        x
    }

    pub fn min_singular_value(&self) -> T {
        self.sigma.last().copied().unwrap_or(T::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(s: &Svd<f64>) -> Matrix<f64> {
        let (m, n) = (s.u.rows(), s.v.rows());
        let mut out = Matrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                out[(i, j)] = (0..n).map(|k| s.u[(i, k)] * s.sigma[k] * s.v[(j, k)]).sum();
            }
        }
        out
    }

    #[test]
    fn reconstructs_and_sorts() {
        let a = Matrix::from_rows(&[
            vec![4.0, 1.0, -2.0],
            vec![1.0, 3.0, 0.5],
            vec![-2.0, 0.5, 1.0],
            vec![0.3, 0.2, 0.1],
        ]);
        let s = svd(&a);
        let back = reconstruct(&s);
        for i in 0..4 {
            for j in 0..3 {
                assert!((back[(i, j)] - a[(i, j)]).abs() < 1e-13);
            }
        }
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn singular_matrix_has_zero_value() {
        let a = Matrix::from_rows(&[vec![1.0f64, 2.0], vec![2.0, 4.0]]);
        let s = svd(&a);
        assert!((s.sigma[0] - 5.0).abs() < 1e-13);
        assert!(s.min_singular_value() < 1e-14);
        // the null vector is ±(2, −1)/√5
        let v = s.v.column(1);
        assert!((v[0] * 1.0 + v[1] * 2.0).abs() < 1e-14);
    }

    #[test]
    fn solve_matches_inverse() {
        let a = Matrix::from_rows(&[vec![2.0f64, 1.0], vec![1.0, 3.0]]);
        let x = svd(&a).solve(&[3.0, 5.0], 1e-14, 0.0);
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn rotation_is_orthogonal() {
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let a = Matrix::from_rows(&[vec![c, -s], vec![s, c]]);
        let d = svd(&a);
        assert!(d.sigma.iter().all(|x| (x - 1.0).abs() < 1e-14));
    }
}
