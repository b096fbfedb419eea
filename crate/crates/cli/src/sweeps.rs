//! Scalability and sensitivity sweeps.

use std::path::Path;

use log::info;

use opdmin_core::seeds::{derive_seed, Stream};
use opdmin_core::stage2::run_estr;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::experiment::{build_instance, drive_repetitions, noise_seed, timed};
use crate::stats::{mean, sample_std};

pub const SCALABILITY_FILE: &str = "scalability.csv";
pub const SENSITIVITY_FILE: &str = "sensitivity.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct ScalabilityRow {
    pub n: usize,
    pub mean_s: f64,
    pub std_s: f64,
}

/// Times the full ESTR pipeline (instance generation, both stages) for
/// each `n`, `cfg.repetitions` times. Repetitions run one after another
/// so that timings do not compete for cores.
pub fn run_scalability(base: &ExperimentConfig, ns: &[usize]) -> CliResult<Vec<ScalabilityRow>> {
    if ns.is_empty() {
        return Err(CliError::config("ns", "need at least one network size"));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::config("ns", "network sizes must be strictly ascending"));
    }
    let master = base.seed.unwrap_or(0);
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut cfg = base.clone();
        cfg.set_n(n)?;
        let mut times = Vec::with_capacity(cfg.repetitions);
        for rep in 0..cfg.repetitions {
            let (result, secs) = timed(|| -> CliResult<()> {
                let inst = build_instance(&cfg, master, rep)?;
                let mut env = inst.env.with_noise_seed(noise_seed(&cfg, master, rep, Algorithm::Estr));
                run_estr(&mut env, &inst.arms, &cfg.run, derive_seed(master, rep as u64, Stream::Algorithm))?;
                Ok(())
            });
            result?;
            times.push(secs);
        }
        let row = ScalabilityRow { n, mean_s: mean(&times), std_s: sample_std(&times) };
        info!("n = {n}: {:.3} s ± {:.3}", row.mean_s, row.std_s);
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_scalability(path: &Path, rows: &[ScalabilityRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "mean_s", "std_s"])?;
    for r in rows {
        w.write_record([r.n.to_string(), r.mean_s.to_string(), r.std_s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Sigma,
    Arms,
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sigma" => Ok(Axis::Sigma),
            "arms" | "k" | "K" => Ok(Axis::Arms),
            other => Err(format!("expected sigma or arms, got {other:?}")),
        }
    }
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Sigma => "sigma",
            Axis::Arms => "arms",
        }
    }

    fn apply(self, cfg: &mut ExperimentConfig, value: f64) -> CliResult<()> {
        match self {
            Axis::Sigma => {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(CliError::config("values", format!("sigma must be >= 0, got {value}")));
                }
                cfg.sigma = value;
            }
            Axis::Arms => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(CliError::config("values", format!("arm counts must be positive integers, got {value}")));
                }
                cfg.arms = value as usize;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub axis: Axis,
    pub value: f64,
    pub algo: Algorithm,
    pub final_regret_mean: f64,
    pub final_regret_std: f64,
    pub runtime_mean_s: f64,
    /// Per-repetition final regrets, in repetition order.
    pub final_regrets: Vec<f64>,
}

/// One paired experiment per value: the master seed and everything but
/// the swept parameter stay fixed.
pub fn run_sensitivity(base: &ExperimentConfig, axis: Axis, values: &[f64]) -> CliResult<Vec<SensitivityRow>> {
    if values.is_empty() {
        return Err(CliError::config("values", "need at least one value"));
    }
    let master = base.seed.unwrap_or(0);
    let mut rows = Vec::new();
    for &value in values {
        let mut cfg = base.clone();
        axis.apply(&mut cfg, value)?;
        let outcomes = drive_repetitions(&cfg, master, |_, _| Ok(()))?;
        for &algo in &cfg.algorithms {
            let runs: Vec<_> = outcomes.iter().flat_map(|o| o.algos.iter().filter(|a| a.algo == algo)).collect();
            let finals: Vec<f64> = runs.iter().map(|a| *a.regret.last().expect("checkpoint")).collect();
            let times: Vec<f64> = runs.iter().map(|a| a.runtime_s).collect();
            rows.push(SensitivityRow {
                axis,
                value,
                algo,
                final_regret_mean: mean(&finals),
                final_regret_std: sample_std(&finals),
                runtime_mean_s: mean(&times),
                final_regrets: finals,
            });
        }
    }
    Ok(rows)
}

pub fn write_sensitivity(path: &Path, rows: &[SensitivityRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["axis", "value", "algo", "final_regret_mean", "final_regret_std", "runtime_mean_s"])?;
    for r in rows {
        w.write_record([
            r.axis.name().to_string(),
            r.value.to_string(),
            r.algo.name().to_string(),
            r.final_regret_mean.to_string(),
            r.final_regret_std.to_string(),
            r.runtime_mean_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentArgs;

    fn base() -> ExperimentConfig {
        ExperimentArgs {
            n: Some(6),
            arms: Some(6),
            horizon: Some(100),
            repetitions: Some(2),
            seed: Some(1),
            algorithms: Some(vec!["estr".into()]),
            ..Default::default()
        }
        .resolve()
        .unwrap()
    }

    #[test]
    fn single_size_gives_single_row() {
        let rows = run_scalability(&base(), &[6]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n, 6);
        assert!(rows[0].mean_s > 0.0);
    }

    #[test]
    fn sizes_must_ascend() {
        assert!(run_scalability(&base(), &[8, 6]).is_err());
        assert!(run_scalability(&base(), &[]).is_err());
    }

    #[test]
    fn single_value_matches_plain_run() {
        let cfg = base();
        let rows = run_sensitivity(&cfg, Axis::Sigma, &[cfg.sigma]).unwrap();
        let report = crate::experiment::run_in_memory(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].final_regrets, report.final_regret(Algorithm::Estr));
    }

    #[test]
    fn arm_axis_rejects_fractions() {
        assert!(run_sensitivity(&base(), Axis::Arms, &[2.5]).is_err());
    }
}
