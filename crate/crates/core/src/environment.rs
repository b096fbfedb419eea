//! Hidden ground truth `Θ* = s sᵀ`, the noisy loss oracle and regret
//! bookkeeping.

use std::time::Duration;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::arms::{Arm, ArmSet};
use crate::error::{Error, Result};
use crate::opinion::{OpinionVector, CENTERING_TOL};
use crate::seeds::{rng, StreamRng};

/// Answers loss queries `Y = sᵀ X s + η`, `η ~ N(0, σ²)`.
#[derive(Debug, Clone)]
pub struct Environment {
    s: OpinionVector,
    sigma: f64,
    noise: StreamRng,
}

impl Environment {
    pub fn new(s: OpinionVector, sigma: f64, noise_seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("noise level must be >= 0, got {sigma}")));
        }
        if s.mean().abs() > CENTERING_TOL {
            return Err(Error::MeanNotCentered { mean: s.mean() });
        }
        if s.values().iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidArgument("innate opinions are all zero".into()));
        }
        Ok(Self { s, sigma, noise: rng(noise_seed) })
    }

    /// Same hidden state with a fresh noise stream.
    pub fn with_noise_seed(&self, noise_seed: u64) -> Self {
        Self { s: self.s.clone(), sigma: self.sigma, noise: rng(noise_seed) }
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Hidden innate opinions; only oracles and diagnostics should look.
    pub fn innate(&self) -> &OpinionVector {
        &self.s
    }

    /// `⟨Θ*, X⟩ = sᵀ X s`, without forming `Θ*`.
    pub fn true_loss(&self, arm: &Arm) -> Result<f64> {
        if arm.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: arm.n() });
        }
        Ok(arm.forest.quad_form(self.s.values()))
    }

    /// Noisy observation for `arm`; advances the noise stream.
    pub fn observe(&mut self, arm: &Arm) -> Result<f64> {
        let loss = self.true_loss(arm)?;
        Ok(self.perturb(loss))
    }

    /// Adds one noise draw to an already known loss.
    pub fn perturb(&mut self, loss: f64) -> f64 {
        let z: f64 = self.noise.sample(StandardNormal);
        loss + self.sigma * z
    }

    pub fn loss_table(&self, arms: &ArmSet) -> Result<LossTable> {
        let losses = arms.iter().map(|a| self.true_loss(a)).collect::<Result<Vec<_>>>()?;
        Ok(LossTable::new(losses))
    }

    /// `argmin_i f(X_i)`, lowest index on ties.
    pub fn best_arm(&self, arms: &ArmSet) -> Result<(usize, f64)> {
        let table = self.loss_table(arms)?;
        Ok((table.best_index, table.best_value))
    }
}

/// True losses of every arm, plus the best one.
#[derive(Debug, Clone)]
pub struct LossTable {
    losses: Vec<f64>,
    best_index: usize,
    best_value: f64,
}

impl LossTable {
    pub fn new(losses: Vec<f64>) -> Self {
        assert!(!losses.is_empty(), "empty loss table");
        let mut best_index = 0;
        for (i, &l) in losses.iter().enumerate() {
            if l < losses[best_index] {
                best_index = i;
            }
        }
        let best_value = losses[best_index];
        Self { losses, best_index, best_value }
    }

    pub fn loss(&self, arm: usize) -> f64 {
        self.losses[arm]
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn best_index(&self) -> usize {
        self.best_index
    }

    pub fn best_value(&self) -> f64 {
        self.best_value
    }

    pub fn gap(&self, arm: usize) -> f64 {
        self.losses[arm] - self.best_value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTiming {
    pub name: String,
    pub elapsed: Duration,
}

/// Per-round regret against the best fixed arm, computed from true losses.
#[derive(Debug, Clone, Default)]
pub struct RegretTrace {
    pub chosen: Vec<usize>,
    pub instant: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub phases: Vec<PhaseTiming>,
}

impl RegretTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(rounds: usize) -> Self {
        Self {
            chosen: Vec::with_capacity(rounds),
            instant: Vec::with_capacity(rounds),
            cumulative: Vec::with_capacity(rounds),
            phases: Vec::new(),
        }
    }

    pub fn record(&mut self, chosen: usize, table: &LossTable) {
        let r = table.gap(chosen);
        let prev = self.cumulative.last().copied().unwrap_or(0.0);
        self.chosen.push(chosen);
        self.instant.push(r);
        self.cumulative.push(prev + r);
    }

    pub fn rounds(&self) -> usize {
        self.chosen.len()
    }

    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Cumulative regret after `t` rounds (1-based).
    pub fn regret_at(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.cumulative[t - 1]
        }
    }

    pub fn add_phase(&mut self, name: &str, elapsed: Duration) {
        self.phases.push(PhaseTiming { name: name.to_string(), elapsed });
    }

    pub fn phase(&self, name: &str) -> Option<Duration> {
        self.phases.iter().find(|p| p.name == name).map(|p| p.elapsed)
    }

    pub fn total_time(&self) -> Duration {
        self.phases.iter().map(|p| p.elapsed).sum()
    }
}
