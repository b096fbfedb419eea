//! OFUL for loss minimization, the two-stage ESTR driver and the
//! full-dimensional and oracle-subspace baselines.

use std::time::Instant;

use log::{debug, warn};

use crate::arms::ArmSet;
use crate::environment::{Environment, LossTable, RegretTrace};
use crate::error::{Error, Result};
use crate::numerics::{dot, Cholesky, SymMatrix};
use crate::seeds::rng;
use crate::stage1::{
    estimate_theta, explore_with_table, lambda_schedule, reduce_armset, ExploreMode, LambdaMode,
    ProxOptions, Sample, ThetaEstimate,
};

/// Confidence radius construction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BetaRule {
    /// `σ·sqrt(2 ln(1/δ) + ln det A − d ln λ) + sqrt(λ)·S`.
    #[default]
    Determinant,
    /// `σ·sqrt(d·ln((1 + t·Lx²/λ)/δ)) + sqrt(λ)·S`.
    Dimensional,
    /// Constant radius; `Fixed(0.0)` turns OFUL into greedy ridge.
    Fixed(f64),
}

impl std::str::FromStr for BetaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "determinant" => Ok(Self::Determinant),
            "dimensional" => Ok(Self::Dimensional),
            other => other
                .strip_prefix("fixed:")
                .and_then(|v| v.parse().ok())
                .map(Self::Fixed)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown beta rule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfulParams {
    pub lambda_reg: f64,
    /// Bound on the parameter norm.
    pub s_bound: f64,
    /// Bound on the feature norm.
    pub lx_bound: f64,
    pub sigma: f64,
    pub delta: f64,
    pub beta_rule: BetaRule,
}

impl OfulParams {
    fn validate(&self) -> Result<()> {
        if !(self.lambda_reg > 0.0) {
            return Err(Error::InvalidArgument(format!("ridge parameter must be > 0, got {}", self.lambda_reg)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }

    /// Radius after `t` updates, given `ln det A − d ln λ`.
    pub fn beta(&self, d: usize, t: usize, log_det_ratio: f64) -> f64 {
        let bias = self.lambda_reg.sqrt() * self.s_bound;
        match self.beta_rule {
            BetaRule::Fixed(b) => b,
            BetaRule::Determinant => {
                self.sigma * (2.0 * (1.0 / self.delta).ln() + log_det_ratio).max(0.0).sqrt() + bias
            }
            BetaRule::Dimensional => {
                let growth = 1.0 + t as f64 * self.lx_bound * self.lx_bound / self.lambda_reg;
                self.sigma * (d as f64 * (growth / self.delta).ln()).max(0.0).sqrt() + bias
            }
        }
    }
}

/// Ridge statistics `A = λI + Σ x xᵀ`, `b = Σ y x`.
///
/// The reference implementation: every query refactorizes `A`. The
/// learners below use [`OfulLearner`] instead.
#[derive(Debug, Clone)]
pub struct BanditState {
    d: usize,
    a: SymMatrix,
    b: Vec<f64>,
    t: usize,
    params: OfulParams,
}

impl BanditState {
    pub fn new(d: usize, params: OfulParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { d, a: SymMatrix::identity(d).scaled(params.lambda_reg), b: vec![0.0; d], t: 0, params })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rounds(&self) -> usize {
        self.t
    }

    pub fn design(&self) -> &SymMatrix {
        &self.a
    }

    pub fn params(&self) -> &OfulParams {
        &self.params
    }

    pub fn theta_hat(&self) -> Result<Vec<f64>> {
        Ok(Cholesky::factor(&self.a)?.solve_vec(&self.b))
    }

    /// `ln det A − d ln λ`.
    pub fn log_det_ratio(&self) -> Result<f64> {
        Ok(Cholesky::factor(&self.a)?.log_det() - self.d as f64 * self.params.lambda_reg.ln())
    }

    pub fn beta(&self) -> Result<f64> {
        Ok(self.params.beta(self.d, self.t, self.log_det_ratio()?))
    }

    /// `‖θ − θ̂‖_A ≤ β`.
    pub fn ellipsoid_contains(&self, theta: &[f64]) -> Result<bool> {
        self.check_dim(theta)?;
        let th = self.theta_hat()?;
        let diff: Vec<f64> = theta.iter().zip(&th).map(|(a, b)| a - b).collect();
        Ok(self.a.quad_form(&diff).max(0.0).sqrt() <= self.beta()?)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: x.len() });
        }
        Ok(())
    }
}

/// Lower confidence bound minimizer, lowest index on ties.
pub fn oful_select(state: &BanditState, features: &[Vec<f64>]) -> Result<usize> {
    if features.is_empty() {
        return Err(Error::InvalidArgument("no arms to select from".into()));
    }
    for x in features {
        state.check_dim(x)?;
    }
    let chol = Cholesky::factor(&state.a)?;
    let theta = chol.solve_vec(&state.b);
    let log_det = chol.log_det() - state.d as f64 * state.params.lambda_reg.ln();
    let beta = state.params.beta(state.d, state.t, log_det);
    let scores = features.iter().map(|x| {
        let width = dot(x, &chol.solve_vec(x)).max(0.0).sqrt();
        dot(x, &theta) - beta * width
    });
    Ok(argmin(scores))
}

pub fn oful_update(state: &mut BanditState, x: &[f64], y: f64) -> Result<()> {
    state.check_dim(x)?;
    state.a.add_outer(1.0, x);
    for (bi, xi) in state.b.iter_mut().zip(x) {
        *bi += y * xi;
    }
    state.t += 1;
    Ok(())
}

fn argmin(scores: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, s) in scores.enumerate() {
        if s < best.1 {
            best = (i, s);
        }
    }
    best.0
}

/// Refactorize when at most this dimension; beyond it the cubic refresh
/// costs more than the drift it removes.
const REFRESH_MAX_DIM: usize = 1024;

/// OFUL over a fixed arm set, keeping `A⁻¹` by Sherman–Morrison along with
/// per-arm caches of `xᵢᵀθ̂` and `xᵢᵀA⁻¹xᵢ`, so a round costs
/// `O(d² + K·d)`.
#[derive(Debug, Clone)]
pub struct OfulLearner {
    features: Vec<Vec<f64>>,
    d: usize,
    params: OfulParams,
    a: SymMatrix,
    a_inv: SymMatrix,
    b: Vec<f64>,
    theta: Vec<f64>,
    means: Vec<f64>,
    widths_sq: Vec<f64>,
    log_det_ratio: f64,
    t: usize,
    refresh_every: usize,
    max_drift: f64,
}

impl OfulLearner {
    pub fn new(features: Vec<Vec<f64>>, params: OfulParams) -> Result<Self> {
        params.validate()?;
        let d = match features.first() {
            Some(f) => f.len(),
            None => return Err(Error::InvalidArgument("no arms to select from".into())),
        };
        if let Some(bad) = features.iter().find(|f| f.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.len() });
        }
        let lam = params.lambda_reg;
        let widths_sq = features.iter().map(|x| dot(x, x) / lam).collect();
        Ok(Self {
            means: vec![0.0; features.len()],
            widths_sq,
            features,
            d,
            params,
            a: SymMatrix::identity(d).scaled(lam),
            a_inv: SymMatrix::identity(d).scaled(1.0 / lam),
            b: vec![0.0; d],
            theta: vec![0.0; d],
            log_det_ratio: 0.0,
            t: 0,
            refresh_every: 500,
            max_drift: 0.0,
        })
    }

    /// Rounds between refactorizations; 0 disables them.
    pub fn with_refresh_every(mut self, rounds: usize) -> Self {
        self.refresh_every = rounds;
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_arms(&self) -> usize {
        self.features.len()
    }

    pub fn rounds(&self) -> usize {
        self.t
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta
    }

    pub fn beta(&self) -> f64 {
        self.params.beta(self.d, self.t, self.log_det_ratio)
    }

    /// Largest `θ̂` change seen at a refactorization.
    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    pub fn select(&self) -> usize {
        let beta = self.beta();
        argmin(self.means.iter().zip(&self.widths_sq).map(|(m, w)| m - beta * w.max(0.0).sqrt()))
    }

    pub fn update(&mut self, arm: usize, y: f64) -> Result<()> {
        let x = &self.features[arm];
        let u = self.a_inv.mul_vec(x);
        let denom = 1.0 + dot(x, &u);
        let innovation = (y - dot(x, &self.theta)) / denom;
        for (ti, ui) in self.theta.iter_mut().zip(&u) {
            *ti += innovation * ui;
        }
        for ((f, m), w) in self.features.iter().zip(&mut self.means).zip(&mut self.widths_sq) {
            let p = dot(f, &u);
            *m += p * innovation;
            *w -= p * p / denom;
        }
        self.a_inv.add_outer(-1.0 / denom, &u);
        self.a.add_outer(1.0, &self.features[arm]);
        for (bi, xi) in self.b.iter_mut().zip(&self.features[arm]) {
            *bi += y * xi;
        }
        self.log_det_ratio += denom.ln();
        self.t += 1;
        if self.refresh_every > 0 && self.d <= REFRESH_MAX_DIM && self.t % self.refresh_every == 0 {
            self.refresh()?;
        }
        Ok(())
    }

    /// Recomputes everything from `A` and `b`.
    pub fn refresh(&mut self) -> Result<()> {
        let chol = Cholesky::factor(&self.a)?;
        let theta = chol.solve_vec(&self.b);
        let drift = theta.iter().zip(&self.theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        self.max_drift = self.max_drift.max(drift);
        if drift > 1e-6 {
            warn!("ridge estimate drifted by {drift:.3e} between refactorizations");
        }
        self.a_inv = chol.inverse();
        self.theta = theta;
        self.log_det_ratio = chol.log_det() - self.d as f64 * self.params.lambda_reg.ln();
        for ((f, m), w) in self.features.iter().zip(&mut self.means).zip(&mut self.widths_sq) {
            *m = dot(f, &self.theta);
            *w = self.a_inv.quad_form(f);
        }
        Ok(())
    }
}

/// Which feature-norm bound feeds the confidence radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LxMode {
    /// `‖vec X‖ ≤ sqrt(n)`.
    #[default]
    Derived,
    /// `n`, the looser table value.
    Conservative,
}

impl std::str::FromStr for LxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derived" | "sqrt-n" => Ok(Self::Derived),
            "conservative" | "n" => Ok(Self::Conservative),
            other => Err(Error::InvalidArgument(format!("unknown Lx mode {other:?}"))),
        }
    }
}

impl LxMode {
    pub fn bound(self, n: usize) -> f64 {
        match self {
            LxMode::Derived => (n as f64).sqrt(),
            LxMode::Conservative => n as f64,
        }
    }
}

/// Nuclear-norm weight selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaRule {
    pub mode: LambdaMode,
    /// Multiply by the noise level. The schedule is calibrated for unit
    /// noise: its event `‖(1/T1) Σ ηₜXₜ‖_op ≤ λ/2` scales with `σ`.
    pub noise_scaled: bool,
    pub multiplier: f64,
}

impl Default for LambdaRule {
    fn default() -> Self {
        Self { mode: LambdaMode::Experiment, noise_scaled: true, multiplier: 1.0 }
    }
}

impl LambdaRule {
    pub fn lambda(&self, n: usize, t1: usize, delta: f64, sigma: f64) -> f64 {
        let base = self.multiplier * lambda_schedule(n, t1, delta, self.mode);
        if self.noise_scaled {
            base * sigma
        } else {
            base
        }
    }
}

/// Settings shared by the three learners.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub horizon: usize,
    pub t1: usize,
    pub delta: f64,
    pub explore_mode: ExploreMode,
    pub lambda_rule: LambdaRule,
    pub prox: ProxOptions,
    pub lambda_reg: f64,
    pub beta_rule: BetaRule,
    pub lx_mode: LxMode,
    /// Overrides the default parameter bound `S = n`.
    pub s_bound: Option<f64>,
    /// Feed the exploration samples into the refinement design.
    pub warm_start: bool,
    pub refresh_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            horizon: 10_000,
            t1: 100,
            delta: 0.001,
            explore_mode: ExploreMode::Auto,
            lambda_rule: LambdaRule::default(),
            prox: ProxOptions::default(),
            lambda_reg: 0.1,
            beta_rule: BetaRule::Determinant,
            lx_mode: LxMode::Derived,
            s_bound: None,
            warm_start: false,
            refresh_every: 500,
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.t1 == 0 || self.t1 > self.horizon {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= T1 <= T, got T1 = {} and T = {}",
                self.t1, self.horizon
            )));
        }
        Ok(())
    }

    fn oful_params(&self, n: usize, sigma: f64, lx_bound: f64) -> OfulParams {
        OfulParams {
            lambda_reg: self.lambda_reg,
            s_bound: self.s_bound.unwrap_or(n as f64),
            lx_bound,
            sigma,
            delta: self.delta,
            beta_rule: self.beta_rule,
        }
    }
}

/// ESTR result: the trace plus the Stage-1 estimate it used.
#[derive(Debug, Clone)]
pub struct EstrOutcome {
    pub trace: RegretTrace,
    pub estimate: ThetaEstimate,
}

/// Runs the refinement stage from round `start` to the horizon.
fn refine(
    learner: &mut OfulLearner,
    env: &mut Environment,
    table: &LossTable,
    rounds: usize,
    trace: &mut RegretTrace,
) -> Result<()> {
    for _ in 0..rounds {
        let arm = learner.select();
        let y = env.perturb(table.loss(arm));
        learner.update(arm, y)?;
        trace.record(arm, table);
    }
    Ok(())
}

/// Explore-subspace-then-refine. `algo_seed` drives the exploration
/// schedule; the environment supplies the noise.
pub fn run_estr(env: &mut Environment, arms: &ArmSet, config: &RunConfig, algo_seed: u64) -> Result<EstrOutcome> {
    config.validate()?;
    let n = arms.n();
    let table = env.loss_table(arms)?;
    let mut trace = RegretTrace::with_capacity(config.horizon);

    let clock = Instant::now();
    let samples = explore_with_table(env, &table, config.t1, config.explore_mode, &mut rng(algo_seed));
    for s in &samples {
        trace.record(s.arm, &table);
    }
    trace.add_phase("explore", clock.elapsed());

    let clock = Instant::now();
    let lambda = config.lambda_rule.lambda(n, config.t1, config.delta, env.sigma());
    let estimate = estimate_theta(&samples, arms, lambda, &config.prox)?;
    debug!(
        "stage 1: lambda {lambda:.4}, {} prox iterations, converged {}",
        estimate.prox_iterations, estimate.converged
    );
    trace.add_phase("estimate", clock.elapsed());

    let clock = Instant::now();
    let features: Vec<Vec<f64>> = reduce_armset(arms, &estimate)?.into_iter().map(|r| r.features).collect();
    let params = config.oful_params(n, env.sigma(), 2f64.sqrt() * config.lx_mode.bound(n));
    let mut learner = OfulLearner::new(features, params)?.with_refresh_every(config.refresh_every);
    if config.warm_start {
        warm_start(&mut learner, &samples)?;
    }
    trace.add_phase("reduce", clock.elapsed());

    let clock = Instant::now();
    refine(&mut learner, env, &table, config.horizon - config.t1, &mut trace)?;
    trace.add_phase("refine", clock.elapsed());
    Ok(EstrOutcome { trace, estimate })
}

fn warm_start(learner: &mut OfulLearner, samples: &[Sample]) -> Result<()> {
    for s in samples {
        learner.update(s.arm, s.observed)?;
    }
    Ok(())
}

/// OFUL on the vectorized `n²`-dimensional arms for the whole horizon.
pub fn run_full_oful(env: &mut Environment, arms: &ArmSet, config: &RunConfig) -> Result<RegretTrace> {
    config.validate()?;
    let n = arms.n();
    let table = env.loss_table(arms)?;
    let mut trace = RegretTrace::with_capacity(config.horizon);

    let clock = Instant::now();
    let features: Vec<Vec<f64>> = arms.iter().map(|a| a.vectorize()).collect();
    let params = config.oful_params(n, env.sigma(), config.lx_mode.bound(n));
    let mut learner = OfulLearner::new(features, params)?.with_refresh_every(config.refresh_every);
    trace.add_phase("features", clock.elapsed());

    let clock = Instant::now();
    refine(&mut learner, env, &table, config.horizon, &mut trace)?;
    trace.add_phase("refine", clock.elapsed());
    Ok(trace)
}

/// Reduced-space OFUL with the true direction `s/‖s‖` from round one.
pub fn run_oracle_subspace(env: &mut Environment, arms: &ArmSet, config: &RunConfig) -> Result<RegretTrace> {
    config.validate()?;
    let n = arms.n();
    let table = env.loss_table(arms)?;
    let mut trace = RegretTrace::with_capacity(config.horizon);

    let clock = Instant::now();
    let estimate = ThetaEstimate::from_direction(env.innate().values())?;
    let features: Vec<Vec<f64>> = reduce_armset(arms, &estimate)?.into_iter().map(|r| r.features).collect();
    let params = config.oful_params(n, env.sigma(), 2f64.sqrt() * config.lx_mode.bound(n));
    let mut learner = OfulLearner::new(features, params)?.with_refresh_every(config.refresh_every);
    trace.add_phase("reduce", clock.elapsed());

    let clock = Instant::now();
    refine(&mut learner, env, &table, config.horizon, &mut trace)?;
    trace.add_phase("refine", clock.elapsed());
    Ok(trace)
}
