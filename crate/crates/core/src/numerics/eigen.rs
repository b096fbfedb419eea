//! Symmetric eigensolvers.
//!
//! `sym_eig` returns the full spectrum via Householder tridiagonalization
//! and implicit QL. Cyclic Jacobi is kept as an independent solver for
//! cross-checks. `top_eigvec` is a shifted power iteration for when only the
//! largest eigenpair is needed.

use super::matrix::{axpy, dot, norm, SymMatrix};
use super::tridiagonal::sym_eig_tridiagonal;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Iteration cap for [`top_eigvec`].
pub const POWER_ITERATION_CAP: usize = 10_000;

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl EigenDecomp {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `Σ_k f(λ_k) v_k v_kᵀ`, skipping terms where `f` returns zero.
    pub fn reconstruct_with(&self, mut f: impl FnMut(f64) -> f64) -> SymMatrix {
        let n = self.n();
        let mut out = SymMatrix::zeros(n);
        for (lambda, v) in self.values.iter().zip(&self.vectors) {
            let w = f(*lambda);
            if w != 0.0 {
                out.add_outer(w, v);
            }
        }
        out
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// Flips `v` so its largest-magnitude entry is positive (first index wins ties).
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Full eigendecomposition, values descending, vectors sign-normalized.
pub fn sym_eig(a: &SymMatrix) -> Result<EigenDecomp> {
    sym_eig_tridiagonal(a)
}

/// Full eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eig_jacobi(a: &SymMatrix) -> Result<EigenDecomp> {
    let n = a.n();
    let mut m = a.as_slice().to_vec();
    // rows of `vt` are the eigenvectors
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let scale = norm(&m);
    if n > 1 && scale > 0.0 {
        jacobi_sweeps(&mut m, &mut vt, n, scale)?;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v = vt[i * n..(i + 1) * n].to_vec();
            fix_sign(&mut v);
            v
        })
        .collect();
    Ok(EigenDecomp { values, vectors })
}

fn off_diagonal_norm(m: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += m[i * n + j] * m[i * n + j];
        }
    }
    (2.0 * s).sqrt()
}

fn jacobi_sweeps(m: &mut [f64], vt: &mut [f64], n: usize, scale: f64) -> Result<()> {
    for sweep in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(m, n);
        if off <= f64::EPSILON * scale * 1e-2 || off == 0.0 {
            return Ok(());
        }
        // skip tiny rotations during the first sweeps
        let thresh = if sweep < 3 { 0.2 * off / (n * n) as f64 } else { 0.0 };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let g = 100.0 * apq.abs();
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    continue;
                }
                if apq.abs() <= thresh || apq == 0.0 {
                    continue;
                }
                let h = aqq - app;
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate(m, n, p, q, c, s);
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                rotate_rows(vt, n, p, q, c, s);
            }
        }
    }
    Err(Error::ConvergenceFailure { what: "Jacobi eigensolver", iterations: MAX_SWEEPS })
}

/// Applies the rotation to rows/columns `p`, `q` of the symmetric buffer,
/// leaving the 2×2 pivot block to the caller.
#[inline]
fn rotate(m: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = m[p * n + r];
        let arq = m[q * n + r];
        let new_p = c * arp - s * arq;
        let new_q = s * arp + c * arq;
        m[p * n + r] = new_p;
        m[q * n + r] = new_q;
        m[r * n + p] = new_p;
        m[r * n + q] = new_q;
    }
}

#[inline]
fn rotate_rows(vt: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = vt.split_at_mut(q * n);
    let row_p = &mut head[p * n..(p + 1) * n];
    let row_q = &mut tail[..n];
    for (x, y) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Largest (algebraic) eigenpair by power iteration on `A + cI`, where `c`
/// bounds the spectral radius so the shifted matrix is positive semidefinite.
///
/// Stops once `‖A v − λ v‖ ≤ tol`. The returned vector follows the
/// [`fix_sign`] convention.
pub fn top_eigvec(a: &SymMatrix, tol: f64) -> Result<(f64, Vec<f64>)> {
    let n = a.n();
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let shift = (0..n)
        .map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    // low-discrepancy start vector; never orthogonal to a structured eigvec in practice
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i + 1) as f64 * 0.754_877_666_246_692_7).fract())
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    for _ in 0..POWER_ITERATION_CAP {
        let av = a.mul_vec(&v);
        let lambda = dot(&v, &av);
        let mut r = av.clone();
        axpy(-lambda, &v, &mut r);
        if norm(&r) <= tol {
            fix_sign(&mut v);
            return Ok((lambda, v));
        }
        let mut w = av;
        axpy(shift, &v, &mut w);
        let nw = norm(&w);
        if nw == 0.0 {
            // A = 0 and shift = 0: every vector is an eigenvector
            fix_sign(&mut v);
            return Ok((0.0, v));
        }
        w.iter_mut().for_each(|x| *x /= nw);
        v = w;
    }
    Err(Error::ConvergenceFailure { what: "power iteration", iterations: POWER_ITERATION_CAP })
}

/// Singular value soft-thresholding of a symmetric matrix:
/// `Σ sign(λ_i)·max(|λ_i| − tau, 0)·v_i v_iᵀ`.
pub fn svd_soft_threshold(a: &SymMatrix, tau: f64) -> Result<SymMatrix> {
    Ok(soft_threshold(&sym_eig(a)?, tau).matrix)
}

/// Result of thresholding an existing eigendecomposition.
#[derive(Debug, Clone)]
pub struct Thresholded {
    pub matrix: SymMatrix,
    /// Shrunk eigenvalues, same order as the input decomposition.
    pub shrunk: Vec<f64>,
    pub nuclear_norm: f64,
    pub rank: usize,
}

pub fn soft_threshold(eig: &EigenDecomp, tau: f64) -> Thresholded {
    assert!(tau >= 0.0, "threshold must be non-negative");
    let shrunk: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| l.signum() * (l.abs() - tau).max(0.0))
        .collect();
    let mut matrix = SymMatrix::zeros(eig.n());
    let mut rank = 0;
    for (w, v) in shrunk.iter().zip(&eig.vectors) {
        if *w != 0.0 {
            matrix.add_outer(*w, v);
            rank += 1;
        }
    }
    let nuclear_norm = shrunk.iter().map(|w| w.abs()).sum();
    Thresholded { matrix, shrunk, nuclear_norm, rank }
}

/// Sum of absolute eigenvalues (the nuclear norm for symmetric input).
pub fn nuclear_norm(a: &SymMatrix) -> Result<f64> {
    Ok(sym_eig(a)?.values.iter().map(|l| l.abs()).sum())
}
