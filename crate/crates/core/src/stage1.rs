//! Exploration stage: uniform pulls, nuclear-norm regularized least
//! squares by proximal gradient, subspace extraction and arm reduction.

use log::{debug, warn};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::arms::ArmSet;
use crate::environment::{Environment, LossTable};
use crate::error::{Error, Result};
use crate::numerics::{
    dot, norm, orthonormal_completion, soft_threshold, sym_eig, top_eigvec, Matrix, SymMatrix,
};

/// One exploration pull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub arm: usize,
    pub observed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExploreMode {
    /// Without replacement while `T1 <= K`, with replacement beyond.
    #[default]
    Auto,
    /// Independent uniform draws.
    WithReplacement,
    /// Consecutive shuffled passes over the arm set.
    WithoutReplacement,
}

impl std::str::FromStr for ExploreMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "with-replacement" => Ok(Self::WithReplacement),
            "without-replacement" => Ok(Self::WithoutReplacement),
            other => Err(Error::InvalidArgument(format!("unknown explore mode {other:?}"))),
        }
    }
}

/// Arm indices for `t1` exploration rounds.
pub fn exploration_schedule<R: Rng + ?Sized>(k: usize, t1: usize, mode: ExploreMode, rng: &mut R) -> Vec<usize> {
    assert!(k >= 1, "empty arm set");
    let with_replacement = match mode {
        ExploreMode::Auto => t1 > k,
        ExploreMode::WithReplacement => true,
        ExploreMode::WithoutReplacement => false,
    };
    if with_replacement {
        return (0..t1).map(|_| rng.random_range(0..k)).collect();
    }
    let mut out = Vec::with_capacity(t1);
    let mut pass: Vec<usize> = (0..k).collect();
    while out.len() < t1 {
        pass.shuffle(rng);
        out.extend(pass.iter().take(t1 - out.len()));
    }
    out
}

/// Pulls `t1` arms and records the noisy losses.
pub fn explore<R: Rng + ?Sized>(
    env: &mut Environment,
    arms: &ArmSet,
    t1: usize,
    mode: ExploreMode,
    rng: &mut R,
) -> Result<Vec<Sample>> {
    if t1 == 0 {
        return Err(Error::InvalidArgument("exploration length must be >= 1".into()));
    }
    exploration_schedule(arms.len(), t1, mode, rng)
        .into_iter()
        .map(|arm| Ok(Sample { arm, observed: env.observe(arms.get(arm))? }))
        .collect()
}

/// Same as [`explore`] but reuses precomputed true losses.
pub(crate) fn explore_with_table<R: Rng + ?Sized>(
    env: &mut Environment,
    table: &LossTable,
    t1: usize,
    mode: ExploreMode,
    rng: &mut R,
) -> Vec<Sample> {
    exploration_schedule(table.losses().len(), t1, mode, rng)
        .into_iter()
        .map(|arm| Sample { arm, observed: env.perturb(table.loss(arm)) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaMode {
    /// `2·sqrt(2·ln(2n/δ)/T1)`.
    Theory,
    /// `(2/sqrt(T1))·sqrt(ln(2n²/10⁻²))`, the setting used in the experiments.
    #[default]
    Experiment,
}

impl std::str::FromStr for LambdaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theory" => Ok(Self::Theory),
            "experiment" => Ok(Self::Experiment),
            other => Err(Error::InvalidArgument(format!("unknown lambda mode {other:?}"))),
        }
    }
}

/// Nuclear-norm weight for `t1` exploration samples on `n` nodes.
pub fn lambda_schedule(n: usize, t1: usize, delta: f64, mode: LambdaMode) -> f64 {
    assert!(t1 >= 1, "T1 must be >= 1");
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    let t1 = t1 as f64;
    let n = n as f64;
    match mode {
        LambdaMode::Theory => 2.0 * (2.0 * (2.0 * n / delta).ln() / t1).sqrt(),
        LambdaMode::Experiment => 2.0 / t1.sqrt() * (2.0 * n * n / 1e-2).ln().sqrt(),
    }
}

/// Proximal-gradient settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxOptions {
    pub max_iter: usize,
    /// Stop once the relative objective decrease falls below this.
    pub tol: f64,
    /// Step is `safety / Lip` with `Lip` the smooth part's Lipschitz constant.
    pub step_safety: f64,
    /// Shrink the step until the quadratic upper bound holds.
    pub backtracking: bool,
    /// Restrict `Θ` to matrices annihilating the all-ones vector.
    ///
    /// Every forest matrix fixes `1`, so `⟨X, 11ᵀ⟩ = n` for all arms and an
    /// unrestricted fit explains the common loss level with a cheap `11ᵀ`
    /// component whose eigenvector then swamps `ŝ`. Centered opinions put
    /// `Θ*` inside the restricted set, so nothing is lost.
    pub centered: bool,
}

impl Default for ProxOptions {
    fn default() -> Self {
        Self { max_iter: 5000, tol: 1e-9, step_safety: 0.95, backtracking: false, centered: true }
    }
}

/// Stage-1 output.
#[derive(Debug, Clone)]
pub struct ThetaEstimate {
    pub theta_hat: SymMatrix,
    /// Unit top eigenvector of `theta_hat` (or `e₀` when degenerate).
    pub s_hat: Vec<f64>,
    /// `n × (n−1)` orthonormal complement of `s_hat`.
    pub s_perp: Matrix,
    pub lambda_used: f64,
    pub step: f64,
    pub prox_iterations: usize,
    pub final_objective: f64,
    pub objective_history: Vec<f64>,
    pub converged: bool,
    /// `‖Θ̂‖_F < 1e-12`; `s_hat` then falls back to `e₀`.
    pub degenerate: bool,
}

impl ThetaEstimate {
    /// An estimate whose subspace is fixed to `direction` (normalized), as
    /// used by the oracle-subspace baseline.
    pub fn from_direction(direction: &[f64]) -> Result<Self> {
        let nd = norm(direction);
        if nd == 0.0 {
            return Err(Error::InvalidArgument("zero direction".into()));
        }
        let s_hat: Vec<f64> = direction.iter().map(|x| x / nd).collect();
        let s_perp = orthonormal_completion(&s_hat)?;
        let mut theta_hat = SymMatrix::zeros(s_hat.len());
        theta_hat.add_outer(nd * nd, &s_hat);
        Ok(Self {
            theta_hat,
            s_hat,
            s_perp,
            lambda_used: 0.0,
            step: 0.0,
            prox_iterations: 0,
            final_objective: 0.0,
            objective_history: Vec::new(),
            converged: true,
            degenerate: false,
        })
    }

    pub fn n(&self) -> usize {
        self.s_hat.len()
    }
}

/// Sufficient statistics of the samples grouped by arm.
struct Design {
    /// One matrix per distinct pulled arm, double-centered when requested.
    matrices: Vec<SymMatrix>,
    n: usize,
    counts: Vec<f64>,
    mean_y: Vec<f64>,
    /// `Σ_t (Y_t − Ȳ_{a_t})²`, the part of the loss no `Θ` can explain.
    within_ss: f64,
    t1: f64,
}

impl Design {
    fn new(samples: &[Sample], design: &[&SymMatrix], n: usize, centered: bool) -> Result<Self> {
        let mut slot = vec![usize::MAX; design.len()];
        let mut distinct = Vec::new();
        let mut counts = Vec::new();
        let mut sum_y = Vec::new();
        for s in samples {
            if s.arm >= design.len() {
                return Err(Error::InvalidArgument(format!("sample refers to arm {}", s.arm)));
            }
            if slot[s.arm] == usize::MAX {
                slot[s.arm] = distinct.len();
                distinct.push(s.arm);
                counts.push(0.0);
                sum_y.push(0.0);
            }
            let k = slot[s.arm];
            counts[k] += 1.0;
            sum_y[k] += s.observed;
        }
        let mean_y: Vec<f64> = sum_y.iter().zip(&counts).map(|(s, c)| s / c).collect();
        let within_ss = samples.iter().map(|s| (s.observed - mean_y[slot[s.arm]]).powi(2)).sum();
        let matrices = distinct
            .iter()
            .map(|&a| if centered { double_center(design[a]) } else { design[a].clone() })
            .collect();
        Ok(Self { matrices, n, counts, mean_y, within_ss, t1: samples.len() as f64 })
    }

    fn forest(&self, k: usize) -> &SymMatrix {
        &self.matrices[k]
    }

    /// `⟨X_a, Θ⟩` for each distinct arm.
    fn predictions(&self, theta: &SymMatrix) -> Vec<f64> {
        self.matrices.iter().map(|m| m.inner(theta)).collect()
    }

    /// `(1/(2T1)) Σ_t (Y_t − ⟨X_t, Θ⟩)²` from the per-arm predictions.
    fn smooth_loss(&self, pred: &[f64]) -> f64 {
        let fit: f64 = (0..pred.len()).map(|k| self.counts[k] * (pred[k] - self.mean_y[k]).powi(2)).sum();
        (self.within_ss + fit) / (2.0 * self.t1)
    }

    /// `(1/T1) Σ_t (⟨X_t, Θ⟩ − Y_t) X_t`.
    fn gradient(&self, pred: &[f64]) -> SymMatrix {
        let mut g = SymMatrix::zeros(self.n);
        for k in 0..pred.len() {
            let w = self.counts[k] * (pred[k] - self.mean_y[k]) / self.t1;
            if w != 0.0 {
                g.add_scaled(w, self.forest(k));
            }
        }
        g
    }

    /// `λ_max((1/T1) Σ_t vec(X_t) vec(X_t)ᵀ)` through the weighted Gram
    /// matrix `(1/T1) C^{1/2} G C^{1/2}` of the distinct arms.
    fn lipschitz(&self) -> f64 {
        let m = self.matrices.len();
        let sqrt_c: Vec<f64> = self.counts.iter().map(|c| c.sqrt()).collect();
        let gram = SymMatrix::from_upper_fn(m, |a, b| {
            sqrt_c[a] * sqrt_c[b] * self.forest(a).inner(self.forest(b)) / self.t1
        });
        let trace = gram.trace();
        match top_eigvec(&gram, 1e-10 * trace.max(1e-300)) {
            Ok((l, _)) => l.max(f64::MIN_POSITIVE),
            Err(e) => {
                debug!("Lipschitz power iteration failed ({e}); using the trace bound");
                trace
            }
        }
    }
}

/// Solves `min_Θ (1/(2T1)) Σ (Y_t − ⟨X_t, Θ⟩)² + λ‖Θ‖_nuc` by proximal
/// gradient from `Θ = 0` and extracts the leading subspace.
pub fn estimate_theta(
    samples: &[Sample],
    arms: &ArmSet,
    lambda: f64,
    opts: &ProxOptions,
) -> Result<ThetaEstimate> {
    let design: Vec<&SymMatrix> = arms.iter().map(|a| &a.forest).collect();
    estimate_theta_from_design(samples, &design, lambda, opts)
}

/// [`estimate_theta`] over arbitrary symmetric design matrices, indexed by
/// `Sample::arm`.
///
/// Forest matrices all fix the all-ones vector, so they can never span the
/// symmetric matrices; exact recovery checks need a general design.
pub fn estimate_theta_from_design(
    samples: &[Sample],
    design: &[&SymMatrix],
    lambda: f64,
    opts: &ProxOptions,
) -> Result<ThetaEstimate> {
    if design.is_empty() {
        return Err(Error::InvalidArgument("empty design".into()));
    }
    let n = design[0].n();
    if let Some(bad) = design.iter().find(|m| m.n() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: bad.n() });
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no exploration samples".into()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let design = Design::new(samples, design, n, opts.centered)?;
    let lip = design.lipschitz();
    let mut step = opts.step_safety / lip;

    let mut theta = SymMatrix::zeros(n);
    let mut pred = design.predictions(&theta);
    let mut smooth = design.smooth_loss(&pred);
    let mut objective = smooth;
    let mut history = vec![objective];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let grad = design.gradient(&pred);
        let (next, next_pred, next_smooth, nuc) = loop {
            let mut point = theta.clone();
            point.add_scaled(-step, &grad);
            point.symmetrize();
            let shrunk = soft_threshold(&sym_eig(&point)?, step * lambda);
            let mut cand = shrunk.matrix;
            cand.symmetrize();
            let cand_pred = design.predictions(&cand);
            let cand_smooth = design.smooth_loss(&cand_pred);
            if opts.backtracking {
                let diff = cand.sub(&theta);
                let bound = smooth + grad.inner(&diff) + diff.inner(&diff) / (2.0 * step);
                if cand_smooth > bound * (1.0 + 1e-12) + 1e-300 && step > 1e-300 {
                    step *= 0.5;
                    continue;
                }
            }
            break (cand, cand_pred, cand_smooth, shrunk.nuclear_norm);
        };
        let next_objective = next_smooth + lambda * nuc;
        let decrease = objective - next_objective;
        theta = next;
        pred = next_pred;
        smooth = next_smooth;
        let prev = objective;
        objective = next_objective;
        history.push(objective);
        if objective <= 1e-30 || decrease.abs() <= opts.tol * prev.abs().max(1e-300) {
            converged = true;
            break;
        }
    }
    if !converged {
        debug!("prox-gradient stopped at the iteration cap ({iterations})");
    }

    let fro = theta.frobenius_norm();
    let degenerate = fro < 1e-12;
    let s_hat = if degenerate {
        warn!("Stage-1 estimate is numerically zero; falling back to e_0 as the subspace");
        let mut e0 = vec![0.0; n];
        e0[0] = 1.0;
        e0
    } else {
        leading_direction(&theta)?
    };
    let s_perp = orthonormal_completion(&s_hat)?;
    Ok(ThetaEstimate {
        theta_hat: theta,
        s_hat,
        s_perp,
        lambda_used: lambda,
        step,
        prox_iterations: iterations,
        final_objective: objective,
        objective_history: history,
        converged,
        degenerate,
    })
}

/// `P M P` with `P = I − 11ᵀ/n`.
pub fn double_center(m: &SymMatrix) -> SymMatrix {
    let n = m.n();
    let nf = n as f64;
    let row_mean: Vec<f64> = (0..n).map(|i| m.row(i).iter().sum::<f64>() / nf).collect();
    let grand = row_mean.iter().sum::<f64>() / nf;
    SymMatrix::from_upper_fn(n, |i, j| m.get(i, j) - row_mean[i] - row_mean[j] + grand)
}

fn leading_direction(theta: &SymMatrix) -> Result<Vec<f64>> {
    let scale = theta.frobenius_norm();
    match top_eigvec(theta, 1e-10 * scale) {
        Ok((_, v)) => Ok(v),
        Err(Error::ConvergenceFailure { .. }) => {
            debug!("power iteration stalled on a small eigengap; using the full decomposition");
            Ok(sym_eig(theta)?.vectors.swap_remove(0))
        }
        Err(e) => Err(e),
    }
}

/// Arm in the rotated `2n − 1` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedArm {
    pub features: Vec<f64>,
    pub original_index: usize,
}

/// `[ŝᵀMŝ ; Ŝ⊥ᵀMŝ ; (ŝᵀMŜ⊥)ᵀ]` from one product `u = M ŝ`.
///
/// For symmetric `M` the last two blocks coincide; both are kept.
pub fn reduce_matrix(m: &SymMatrix, s_hat: &[f64], s_perp: &Matrix) -> Vec<f64> {
    let u = m.mul_vec(s_hat);
    let head = dot(s_hat, &u);
    let off = s_perp.transpose_mul_vec(&u);
    let mut features = Vec::with_capacity(1 + 2 * off.len());
    features.push(head);
    features.extend_from_slice(&off);
    features.extend_from_slice(&off);
    features
}

pub fn reduce_armset(arms: &ArmSet, est: &ThetaEstimate) -> Result<Vec<ReducedArm>> {
    if arms.n() != est.n() {
        return Err(Error::DimensionMismatch { expected: est.n(), found: arms.n() });
    }
    Ok(arms
        .iter()
        .map(|arm| ReducedArm {
            features: reduce_matrix(&arm.forest, &est.s_hat, &est.s_perp),
            original_index: arm.index,
        })
        .collect())
}

/// Reduced true parameter `[ŝᵀΘ*ŝ ; Ŝ⊥ᵀΘ*ŝ ; (ŝᵀΘ*Ŝ⊥)ᵀ]` for `Θ* = s sᵀ`.
/// Needs the hidden opinions, so only oracles and tests call it.
pub fn reduced_theta(est: &ThetaEstimate, s: &[f64]) -> Vec<f64> {
    let along = dot(&est.s_hat, s);
    let perp = est.s_perp.transpose_mul_vec(s);
    let mut out = Vec::with_capacity(1 + 2 * perp.len());
    out.push(along * along);
    out.extend(perp.iter().map(|p| p * along));
    out.extend(perp.iter().map(|p| p * along));
    out
}

/// `Ŝ⊥ᵀ M Ŝ⊥`, the block the reduction discards.
pub fn residual_block(m: &SymMatrix, s_perp: &Matrix) -> Matrix {
    s_perp.transpose_mul(&m.mul_mat(s_perp))
}
