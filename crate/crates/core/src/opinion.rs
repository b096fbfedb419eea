//! Friedkin–Johnsen dynamics and the polarization/disagreement objective.
//!
//! With innate opinions `s` and graph Laplacian `L`, expressed opinions
//! evolve as `z ← (D + I)⁻¹(A z + s)` and settle at `z* = (I + L)⁻¹ s`.
//! For mean-centered `s`, `polarization(z*) + disagreement(z*) = sᵀ(I + L)⁻¹s`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::numerics::{dot, spd_solve, Matrix, SymMatrix};

/// Tolerance on `|mean(s)|` accepted by [`objective_f`].
pub const CENTERING_TOL: f64 = 1e-9;

const RANGE_SLACK: f64 = 1e-12;

/// Opinions in `[−1, 1]`, one per node.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionVector(Vec<f64>);

impl OpinionVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.abs() <= 1.0 + RANGE_SLACK))
        {
            return Err(Error::InvalidArgument(format!("opinion {i} = {v} outside [-1, 1]")));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.0)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Precomputed neighbourhoods for repeated synchronous updates.
struct FjOperator {
    neighbors: Vec<Vec<(usize, f64)>>,
    inv_degree_plus_one: Vec<f64>,
}

impl FjOperator {
    fn new(g: &WeightedGraph) -> Self {
        let inv_degree_plus_one = g.degrees().iter().map(|d| 1.0 / (d + 1.0)).collect();
        Self { neighbors: g.neighbors(), inv_degree_plus_one }
    }

    fn apply(&self, z: &[f64], s: &[f64], out: &mut [f64]) {
        for (i, out_i) in out.iter_mut().enumerate() {
            let pull: f64 = self.neighbors[i].iter().map(|&(j, w)| w * z[j]).sum();
            *out_i = (pull + s[i]) * self.inv_degree_plus_one[i];
        }
    }
}

/// One synchronous update `(D + I)⁻¹(A z + s)`.
pub fn fj_step(z: &OpinionVector, g: &WeightedGraph, s: &OpinionVector) -> Result<OpinionVector> {
    check_dim(g.n(), z.len())?;
    check_dim(g.n(), s.len())?;
    let mut out = vec![0.0; g.n()];
    FjOperator::new(g).apply(z.values(), s.values(), &mut out);
    Ok(OpinionVector(out))
}

/// Equilibrium reached by iterating [`fj_step`] from `z⁰ = s`.
#[derive(Debug, Clone)]
pub struct IterativeEquilibrium {
    pub opinions: OpinionVector,
    pub iterations: usize,
}

/// Iterates until `‖z^{t+1} − z^t‖_∞ ≤ tol`.
pub fn fj_equilibrium_iterative(
    g: &WeightedGraph,
    s: &OpinionVector,
    tol: f64,
    max_iter: usize,
) -> Result<IterativeEquilibrium> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    check_dim(g.n(), s.len())?;
    let op = FjOperator::new(g);
    let mut z = s.values().to_vec();
    let mut next = vec![0.0; z.len()];
    for it in 1..=max_iter {
        op.apply(&z, s.values(), &mut next);
        let change = z.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut z, &mut next);
        if change <= tol {
            return Ok(IterativeEquilibrium { opinions: OpinionVector(z), iterations: it });
        }
    }
    Err(Error::ConvergenceFailure { what: "Friedkin-Johnsen iteration", iterations: max_iter })
}

/// `z* = (I + L)⁻¹ s`.
pub fn fj_equilibrium_closed(laplacian: &SymMatrix, s: &OpinionVector) -> Result<OpinionVector> {
    check_dim(laplacian.n(), s.len())?;
    let z = spd_solve(&laplacian.shifted(1.0), &Matrix::column_vector(s.values()))?;
    Ok(OpinionVector(z.column(0)))
}

/// `Σ_i (z_i − mean(z))²`.
pub fn polarization(z: &OpinionVector) -> f64 {
    let m = z.mean();
    z.values().iter().map(|x| (x - m) * (x - m)).sum()
}

/// `Σ_{(i,j)∈E} w_ij (z_i − z_j)²`, i.e. `zᵀ L z`.
pub fn disagreement(z: &OpinionVector, g: &WeightedGraph) -> Result<f64> {
    check_dim(g.n(), z.len())?;
    let zv = z.values();
    Ok(g.edges()
        .iter()
        .map(|e| {
            let d = zv[e.i] - zv[e.j];
            e.weight * d * d
        })
        .sum())
}

/// `f(s, L) = sᵀ(I + L)⁻¹ s` for mean-centered `s`.
pub fn objective_f(s: &OpinionVector, laplacian: &SymMatrix) -> Result<f64> {
    check_dim(laplacian.n(), s.len())?;
    let m = s.mean();
    if m.abs() > CENTERING_TOL {
        return Err(Error::MeanNotCentered { mean: m });
    }
    let z = fj_equilibrium_closed(laplacian, s)?;
    Ok(dot(s.values(), z.values()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpinionMode {
    /// i.i.d. `Unif[−1, 1]`.
    Uniform,
    /// Uniform draws pushed toward the extremes by `x ↦ sign(x)|x|^{1/3}`.
    Polarized,
}

impl std::str::FromStr for OpinionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "polarized" => Ok(Self::Polarized),
            other => Err(Error::InvalidArgument(format!("unknown opinion mode {other:?}"))),
        }
    }
}

/// `sign(x)·|x|^{1/3}`.
pub fn polarize(x: f64) -> f64 {
    x.signum() * x.abs().cbrt()
}

/// Mean-centered innate opinions.
///
/// When subtracting the mean pushes an entry outside `[−1, 1]`, the shift
/// `c` is re-solved so that `clip(u − c)` has zero mean; otherwise this is
/// plain mean subtraction.
pub fn sample_opinions<R: Rng + ?Sized>(n: usize, mode: OpinionMode, rng: &mut R) -> OpinionVector {
    assert!(n >= 2, "need at least two nodes");
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            let u = rng.random_range(-1.0..=1.0);
            match mode {
                OpinionMode::Uniform => u,
                OpinionMode::Polarized => polarize(u),
            }
        })
        .collect();
    OpinionVector(center_within_unit_box(&raw))
}

/// Shifts `u` to zero mean, clipping to `[−1, 1]` where needed.
pub fn center_within_unit_box(u: &[f64]) -> Vec<f64> {
    let m = mean(u);
    let centered: Vec<f64> = u.iter().map(|x| x - m).collect();
    if centered.iter().all(|x| x.abs() <= 1.0) {
        return centered;
    }
    // mean(clip(u − c)) is continuous and non-increasing in c
    let clipped_mean = |c: f64| mean(&u.iter().map(|x| (x - c).clamp(-1.0, 1.0)).collect::<Vec<_>>());
    let (mut lo, mut hi) = (m - 2.0, m + 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if clipped_mean(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let mut out: Vec<f64> = u.iter().map(|x| (x - c).clamp(-1.0, 1.0)).collect();
    // spread the last rounding residue over the unclipped entries
    let free: Vec<usize> = (0..out.len()).filter(|&i| out[i].abs() < 1.0).collect();
    if !free.is_empty() {
        let r = mean(&out) * out.len() as f64 / free.len() as f64;
        for i in free {
            out[i] = (out[i] - r).clamp(-1.0, 1.0);
        }
    }
    out
}
