use super::matrix::{norm, Matrix};
use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-10;

/// Orthonormal basis of the complement of `v`, as an `n × (n−1)` matrix.
///
/// Uses the Householder reflector `H = I − 2wwᵀ/‖w‖²` with
/// `w = v + sign(v₀)e₀`, which maps `e₀` to `∓v`; columns `1..n` of `H`
/// are orthonormal and orthogonal to `v`.
pub fn orthonormal_completion(v: &[f64]) -> Result<Matrix> {
    let n = v.len();
    let nv = norm(v);
    if n == 0 || (nv - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnitVector { norm: nv });
    }
    let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = v.to_vec();
    w[0] += sign;
    let ww: f64 = w.iter().map(|x| x * x).sum();
    Ok(Matrix::from_fn(n, n - 1, |i, j| {
        let col = j + 1;
        let delta = if i == col { 1.0 } else { 0.0 };
        delta - 2.0 * w[i] * w[col] / ww
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::testing::random_unit_vector;

    fn orthogonality_defect(v: &[f64], perp: &Matrix) -> f64 {
        let n = v.len();
        let q = Matrix::from_fn(n, n, |i, j| if j == 0 { v[i] } else { perp.get(i, j - 1) });
        q.transpose_mul(&q).sub(&Matrix::identity(n)).frobenius_norm()
    }

    #[test]
    fn first_basis_vector() {
        let perp = orthonormal_completion(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(perp.rows(), 3);
        assert_eq!(perp.cols(), 2);
        for i in 0..2 {
            assert_eq!(perp.get(0, i), 0.0);
        }
        assert!((perp.get(1, 0).abs() - 1.0).abs() < 1e-15);
        assert!((perp.get(2, 1).abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_dimensional_complement() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let perp = orthonormal_completion(&[h, h]).unwrap();
        let c = perp.column(0);
        assert!((c[0].abs() - h).abs() < 1e-12);
        assert!((c[0] + c[1]).abs() < 1e-12);
    }

    #[test]
    fn random_vectors_complete_to_orthogonal_basis() {
        for seed in 0..20 {
            let v = random_unit_vector(5, seed);
            let perp = orthonormal_completion(&v).unwrap();
            assert!(orthogonality_defect(&v, &perp) < 1e-10);
        }
    }

    #[test]
    fn negative_leading_entry() {
        let v = [-0.6, 0.8];
        let perp = orthonormal_completion(&v).unwrap();
        assert!(orthogonality_defect(&v, &perp) < 1e-12);
    }

    #[test]
    fn rejects_non_unit() {
        assert!(matches!(
            orthonormal_completion(&[1.0, 1.0]),
            Err(Error::NotUnitVector { .. })
        ));
    }
}
