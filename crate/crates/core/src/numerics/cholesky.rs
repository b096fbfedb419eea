use super::matrix::{dot, Matrix, SymMatrix};
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    // row-major lower triangle, upper part left at zero
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &SymMatrix) -> Result<Self> {
        let n = a.n();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let row_j = &l[j * n..j * n + j];
            let d = a.get(j, j) - dot(row_j, row_j);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let s = a.get(i, j) - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n, "solve dimension");
        // forward: L y = b
        for i in 0..n {
            let s = b[i] - dot(&self.l[i * n..i * n + i], &b[..i]);
            b[i] = s / self.l[i * n + i];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_mat(&self, b: &Matrix) -> Matrix {
        assert_eq!(b.rows(), self.n, "solve dimension");
        let mut out = Matrix::zeros(b.rows(), b.cols());
        let mut col = vec![0.0; self.n];
        for j in 0..b.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b.get(i, j);
            }
            self.solve_in_place(&mut col);
            for (i, &c) in col.iter().enumerate() {
                out.set(i, j, c);
            }
        }
        out
    }

    /// `A⁻¹`, symmetrized.
    pub fn inverse(&self) -> SymMatrix {
        let inv = self.solve_mat(&Matrix::identity(self.n));
        SymMatrix::symmetrized(&inv)
    }

    /// `ln det A`.
    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| 2.0 * self.l[i * self.n + i].ln()).sum()
    }
}

/// Solves `A X = B` for symmetric positive definite `A` via Cholesky.
pub fn spd_solve(a: &SymMatrix, b: &Matrix) -> Result<Matrix> {
    if b.rows() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: b.rows() });
    }
    Ok(Cholesky::factor(a)?.solve_mat(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: &SymMatrix, x: &Matrix, b: &Matrix) -> f64 {
        a.mul_mat(x).sub(b).frobenius_norm() / b.frobenius_norm().max(1e-300)
    }

    #[test]
    fn identity_solve() {
        let x = spd_solve(&SymMatrix::identity(2), &Matrix::identity(2)).unwrap();
        assert_eq!(x, Matrix::identity(2));
    }

    #[test]
    fn diagonal_solve() {
        let a = SymMatrix::from_diagonal(&[2.0, 4.0]);
        let x = spd_solve(&a, &Matrix::identity(2)).unwrap();
        assert!((x.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((x.get(1, 1) - 0.25).abs() < 1e-15);
        assert_eq!(x.get(0, 1), 0.0);
    }

    #[test]
    fn path_laplacian_shift_solve() {
        let a = SymMatrix::from_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        let b = Matrix::column_vector(&[1.0, 1.0]);
        let x = spd_solve(&a, &b).unwrap();
        // A·(1,1) = (2-1, -1+2) = (1,1)
        assert!((x.get(0, 0) - 1.0).abs() < 1e-14);
        assert!((x.get(1, 0) - 1.0).abs() < 1e-14);
        assert!(residual(&a, &x, &b) < 1e-10);
    }

    #[test]
    fn rejects_indefinite() {
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        match Cholesky::factor(&a) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn log_det_of_diagonal() {
        let c = Cholesky::factor(&SymMatrix::from_diagonal(&[2.0, 3.0, 0.5])).unwrap();
        assert!((c.log_det() - 3.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn random_spd_residual() {
        let n = 12;
        let g = Matrix::from_fn(n, n, |i, j| ((i * 7 + j * 13) % 11) as f64 / 11.0 - 0.4);
        let mut a = SymMatrix::symmetrized(&g.transpose().mul(&g));
        a = a.shifted(0.5);
        let b = Matrix::from_fn(n, 3, |i, j| (i as f64 - j as f64).sin());
        let x = spd_solve(&a, &b).unwrap();
        assert!(residual(&a, &x, &b) < 1e-10);
    }
}
