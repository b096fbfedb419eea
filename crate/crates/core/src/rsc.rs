//! Arm-set diversity diagnostics: the global second-moment eigenvalue
//! `κ_min` and a projected-gradient estimate `κ̂` of restricted curvature.
//!
//! `κ̂` is a heuristic minimum over a nonconvex set. It upper-bounds the
//! true restricted minimum and is not a certified lower bound on anything.

use log::debug;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::arms::ArmSet;
use crate::error::{Error, Result};
use crate::numerics::{norm, nuclear_norm, sym_eig, top_eigvec, SymMatrix};
use crate::seeds::{mix, rng};

/// Default ratio in `‖Δ_{M̄⊥}‖_nuc ≤ 3‖Δ_{M̄}‖_nuc`.
pub const CONE_FACTOR: f64 = 3.0;

/// Error cone around the model subspace `span(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    s_direction: Vec<f64>,
    cone_factor: f64,
}

impl ConeSpec {
    /// Normalizes `s`.
    pub fn new(s: &[f64]) -> Result<Self> {
        Self::with_factor(s, CONE_FACTOR)
    }

    pub fn with_factor(s: &[f64], cone_factor: f64) -> Result<Self> {
        let ns = norm(s);
        if ns == 0.0 {
            return Err(Error::InvalidArgument("cone direction is zero".into()));
        }
        if !(cone_factor >= 0.0) {
            return Err(Error::InvalidArgument(format!("cone factor must be >= 0, got {cone_factor}")));
        }
        Ok(Self { s_direction: s.iter().map(|x| x / ns).collect(), cone_factor })
    }

    pub fn direction(&self) -> &[f64] {
        &self.s_direction
    }

    pub fn cone_factor(&self) -> f64 {
        self.cone_factor
    }

    pub fn n(&self) -> usize {
        self.s_direction.len()
    }

    /// `(PΔ + ΔP − PΔP, (I−P)Δ(I−P))` with `P = ŝŝᵀ`.
    pub fn split(&self, delta: &SymMatrix) -> (SymMatrix, SymMatrix) {
        let (model, perp, _) = self.split_with_model_norm(delta);
        (model, perp)
    }

    /// [`split`](Self::split) plus the model part's nuclear norm in closed form.
    ///
    /// With `u = Δŝ = cŝ + w`, `w ⟂ ŝ`, the model part is `cŝŝᵀ + ŝwᵀ + wŝᵀ`,
    /// a 2×2 block `[[c, ‖w‖], [‖w‖, 0]]` whose eigenvalues have opposite
    /// signs, so the nuclear norm is `sqrt(c² + 4‖w‖²)`.
    fn split_with_model_norm(&self, delta: &SymMatrix) -> (SymMatrix, SymMatrix, f64) {
        let s = &self.s_direction;
        let n = s.len();
        let u = delta.mul_vec(s);
        let c = crate::numerics::dot(s, &u);
        let model = SymMatrix::from_upper_fn(n, |i, j| s[i] * u[j] + u[i] * s[j] - c * s[i] * s[j]);
        let perp = delta.sub(&model);
        let w_sq: f64 = u.iter().zip(s).map(|(ui, si)| (ui - c * si).powi(2)).sum();
        (model, perp, (c * c + 4.0 * w_sq).sqrt())
    }

    pub fn contains(&self, delta: &SymMatrix) -> bool {
        let (model, perp) = self.split(delta);
        nuclear_norm(&perp).unwrap_or(f64::INFINITY) <= self.cone_factor * nuclear_norm(&model).unwrap_or(0.0) + 1e-9
    }
}

/// Shrinks the off-model part onto the cone boundary when it is too large.
pub fn cone_project(delta: &SymMatrix, cone: &ConeSpec) -> Result<SymMatrix> {
    if delta.n() != cone.n() {
        return Err(Error::DimensionMismatch { expected: cone.n(), found: delta.n() });
    }
    let (model, perp, model_nuc) = cone.split_with_model_norm(delta);
    let perp_nuc = nuclear_norm(&perp)?;
    let limit = cone.cone_factor * model_nuc;
    if perp_nuc <= limit {
        return Ok(delta.clone());
    }
    let mut out = model;
    // stay a hair inside so the membership test survives rounding
    out.add_scaled(limit / perp_nuc * (1.0 - 1e-12), &perp);
    Ok(out)
}

/// `λ_min((1/K) Σ vec(Xᵢ) vec(Xᵢ)ᵀ)`, clamped at zero.
///
/// With fewer than `n²` arms the matrix is rank deficient and the answer is
/// 0 without assembling it. Symmetric arms leave every antisymmetric
/// direction in the kernel, so for `n ≥ 2` the value is always 0.
pub fn kappa_min(arms: &ArmSet) -> Result<f64> {
    let n = arms.n();
    let d = n * n;
    if arms.len() < d {
        return Ok(0.0);
    }
    let mut m = SymMatrix::zeros(d);
    for arm in arms.iter() {
        m.add_outer(1.0, &arm.vectorize());
    }
    m.scale(1.0 / arms.len() as f64);
    let lmin = *sym_eig(&m)?.values.last().expect("non-empty spectrum");
    Ok(if lmin > -1e-10 { lmin.max(0.0) } else { lmin })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgdOptions {
    pub restarts: usize,
    pub iterations: usize,
    /// Gradient step; `None` uses `1 / (2 λ_max)` of the sample design.
    pub step: Option<f64>,
    pub seed: u64,
}

impl Default for PgdOptions {
    fn default() -> Self {
        Self { restarts: 10, iterations: 500, step: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport {
    pub kappa_min: f64,
    pub kappa_hat: f64,
    pub restarts: usize,
    pub pgd_iterations: usize,
    /// Whether the last restart's final iterate moved less than 1e-10.
    pub converged: bool,
    /// Running best after each restart.
    pub running_best: Vec<f64>,
}

/// Distinct sampled arms with their multiplicities.
struct SampleDesign<'a> {
    arms: Vec<&'a SymMatrix>,
    weights: Vec<f64>,
}

impl<'a> SampleDesign<'a> {
    fn new(arms: &'a ArmSet, indices: &[usize]) -> Result<Self> {
        let mut counts = vec![0usize; arms.len()];
        for &i in indices {
            if i >= arms.len() {
                return Err(Error::InvalidArgument(format!("sample index {i} out of range")));
            }
            counts[i] += 1;
        }
        let t1 = indices.len() as f64;
        let (mut out, mut weights) = (Vec::new(), Vec::new());
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                out.push(&arms.get(i).forest);
                weights.push(c as f64 / t1);
            }
        }
        Ok(Self { arms: out, weights })
    }

    /// `(1/T1) Σ ⟨X_t, Δ⟩²` and its gradient `(2/T1) Σ ⟨X_t, Δ⟩ X_t`.
    fn objective_and_gradient(&self, delta: &SymMatrix) -> (f64, SymMatrix) {
        let mut value = 0.0;
        let mut grad = SymMatrix::zeros(delta.n());
        for (x, w) in self.arms.iter().zip(&self.weights) {
            let p = x.inner(delta);
            value += w * p * p;
            grad.add_scaled(2.0 * w * p, x);
        }
        (value, grad)
    }

    fn objective(&self, delta: &SymMatrix) -> f64 {
        self.arms.iter().zip(&self.weights).map(|(x, w)| w * x.inner(delta).powi(2)).sum()
    }

    /// `λ_max` of the weighted Gram matrix, equal to that of the design operator.
    fn lambda_max(&self) -> f64 {
        let m = self.arms.len();
        let sw: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let gram = SymMatrix::from_upper_fn(m, |a, b| sw[a] * sw[b] * self.arms[a].inner(self.arms[b]));
        match top_eigvec(&gram, 1e-10 * gram.trace().max(1e-300)) {
            Ok((l, _)) => l,
            Err(_) => gram.trace(),
        }
    }
}

/// Keeps the two eigenpairs of largest magnitude.
fn rank_two(delta: &SymMatrix) -> Result<SymMatrix> {
    let e = sym_eig(delta)?;
    let mut order: Vec<usize> = (0..e.values.len()).collect();
    order.sort_by(|&a, &b| e.values[b].abs().total_cmp(&e.values[a].abs()));
    let mut out = SymMatrix::zeros(delta.n());
    for &k in order.iter().take(2) {
        out.add_outer(e.values[k], &e.vectors[k]);
    }
    Ok(out)
}

fn normalized(mut delta: SymMatrix) -> Option<SymMatrix> {
    let f = delta.frobenius_norm();
    if f < 1e-14 || !f.is_finite() {
        return None;
    }
    delta.scale(1.0 / f);
    Some(delta)
}

/// A feasible starting point: random symmetric, rank two, in the cone.
fn random_start<R: Rng>(n: usize, cone: &ConeSpec, rng: &mut R) -> Result<SymMatrix> {
    loop {
        let g = SymMatrix::from_upper_fn(n, |_, _| rng.sample(StandardNormal));
        if let Some(d) = normalized(cone_project(&rank_two(&g)?, cone)?) {
            return Ok(d);
        }
    }
}

/// Minimizes `(1/T1) Σ ⟨X_t, Δ⟩²` over unit-Frobenius, rank-two, cone
/// directions by projected gradient with random restarts.
pub fn kappa_hat_pgd(
    arms: &ArmSet,
    sample_indices: &[usize],
    cone: &ConeSpec,
    opts: &PgdOptions,
) -> Result<CurvatureReport> {
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument("need at least one restart".into()));
    }
    if sample_indices.is_empty() {
        return Err(Error::InvalidArgument("no sampled arms".into()));
    }
    if cone.n() != arms.n() {
        return Err(Error::DimensionMismatch { expected: arms.n(), found: cone.n() });
    }
    let n = arms.n();
    let design = SampleDesign::new(arms, sample_indices)?;
    let step = opts.step.unwrap_or_else(|| 1.0 / (2.0 * design.lambda_max().max(f64::MIN_POSITIVE)));

    let mut best = f64::INFINITY;
    let mut running_best = Vec::with_capacity(opts.restarts);
    let mut total_iterations = 0;
    let mut converged = false;
    for restart in 0..opts.restarts {
        let mut r = rng(mix(opts.seed, restart as u64));
        let mut delta = random_start(n, cone, &mut r)?;
        let mut restart_best = f64::INFINITY;
        converged = false;
        for _ in 0..opts.iterations {
            total_iterations += 1;
            let (value, grad) = design.objective_and_gradient(&delta);
            restart_best = restart_best.min(value);
            let mut next = delta.clone();
            next.add_scaled(-step, &grad);
            let Some(next) = normalized(cone_project(&rank_two(&next)?, cone)?) else {
                debug!("PGD iterate left the cone entirely; ending restart {restart}");
                break;
            };
            let moved = next.sub(&delta).frobenius_norm();
            delta = next;
            if moved < 1e-10 {
                converged = true;
                break;
            }
        }
        restart_best = restart_best.min(design.objective(&delta));
        best = best.min(restart_best);
        running_best.push(best);
    }
    Ok(CurvatureReport {
        kappa_min: kappa_min(arms)?,
        kappa_hat: best.max(0.0),
        restarts: opts.restarts,
        pgd_iterations: total_iterations,
        converged,
        running_best,
    })
}
