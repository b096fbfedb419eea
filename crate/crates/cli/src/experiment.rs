//! Paired repetitions of the bandit algorithms on shared instances.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use opdmin_core::arms::{generate_diverse, perturb_local, ArmSet};
use opdmin_core::environment::{Environment, RegretTrace};
use opdmin_core::graph::WeightedGraph;
use opdmin_core::opinion::sample_opinions;
use opdmin_core::seeds::{derive_seed, mix, rng, Stream};
use opdmin_core::stage1::ThetaEstimate;
use opdmin_core::stage2::{run_estr, run_full_oful, run_oracle_subspace};

use crate::config::{Algorithm, ExperimentConfig, GraphSource, NoisePairing, Regime};
use crate::error::{CliError, CliResult};
use crate::stats::{mean, sample_std};

pub const ROUNDS_FILE: &str = "rounds.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const ROUNDS_HEADER: [&str; 6] = ["rep", "algo", "t", "chosen_arm", "instant_regret", "cumulative_regret"];
pub const SUMMARY_HEADER: [&str; 6] =
    ["algo", "checkpoint_t", "regret_mean", "regret_std", "runtime_mean_s", "runtime_std_s"];

/// One problem instance shared by every algorithm of a repetition.
#[derive(Debug, Clone)]
pub struct Instance {
    pub base: WeightedGraph,
    pub env: Environment,
    pub arms: ArmSet,
}

/// Draws the graph, opinions and arms of repetition `rep`.
pub fn build_instance(cfg: &ExperimentConfig, master: u64, rep: usize) -> CliResult<Instance> {
    let rep = rep as u64;
    let base = match &cfg.graph {
        GraphSource::Random(family) => {
            let g = family.sample(cfg.n, &mut rng(derive_seed(master, rep, Stream::Graph)));
            if !g.is_connected() {
                warn!("repetition {rep}: base graph has {} components", g.connected_components());
            }
            g
        }
        GraphSource::File { graph, .. } => graph.clone(),
    };
    let s = sample_opinions(cfg.n, cfg.opinions, &mut rng(derive_seed(master, rep, Stream::Opinions)));
    let mut arm_rng = rng(derive_seed(master, rep, Stream::Arms));
    let arms = match cfg.regime {
        Regime::Local => perturb_local(&base, &cfg.edits, cfg.arms, &mut arm_rng)?,
        Regime::Diverse => {
            let family = cfg
                .family()
                .ok_or_else(|| CliError::config("regime", "diverse arms need a random graph family"))?;
            generate_diverse(cfg.n, cfg.arms, family, &mut arm_rng)?
        }
    };
    let env = Environment::new(s, cfg.sigma, derive_seed(master, rep, Stream::Noise))?;
    Ok(Instance { base, env, arms })
}

/// Noise seed handed to `algo` in repetition `rep`.
pub fn noise_seed(cfg: &ExperimentConfig, master: u64, rep: usize, algo: Algorithm) -> u64 {
    let seed = derive_seed(master, rep as u64, Stream::Noise);
    match cfg.noise_pairing {
        NoisePairing::Shared => seed,
        NoisePairing::Independent => mix(seed, algo as u64 + 1),
    }
}

/// Result of one algorithm in one repetition.
#[derive(Debug, Clone)]
pub struct AlgoRun {
    pub algo: Algorithm,
    pub trace: RegretTrace,
    /// Sum of the algorithm's timed phases.
    pub runtime_s: f64,
    pub estimate: Option<ThetaEstimate>,
}

pub fn run_algorithm(
    cfg: &ExperimentConfig,
    inst: &Instance,
    algo: Algorithm,
    master: u64,
    rep: usize,
) -> CliResult<AlgoRun> {
    let mut env = inst.env.with_noise_seed(noise_seed(cfg, master, rep, algo));
    let (trace, estimate) = match algo {
        Algorithm::Estr => {
            let seed = derive_seed(master, rep as u64, Stream::Algorithm);
            let out = run_estr(&mut env, &inst.arms, &cfg.run, seed)?;
            (out.trace, Some(out.estimate))
        }
        Algorithm::FullOful => (run_full_oful(&mut env, &inst.arms, &cfg.run)?, None),
        Algorithm::Oracle => (run_oracle_subspace(&mut env, &inst.arms, &cfg.run)?, None),
    };
    let runtime_s = trace.total_time().as_secs_f64();
    Ok(AlgoRun { algo, trace, runtime_s, estimate })
}

/// Runs every configured algorithm on repetition `rep`'s instance.
pub fn run_repetition(cfg: &ExperimentConfig, master: u64, rep: usize) -> CliResult<Vec<AlgoRun>> {
    let inst = build_instance(cfg, master, rep)?;
    cfg.algorithms.iter().map(|&a| run_algorithm(cfg, &inst, a, master, rep)).collect()
}

/// Summary checkpoints: `{10², 10³, 10⁴} ∩ [1, T]`, plus `T` itself.
pub fn checkpoints(horizon: usize) -> Vec<usize> {
    let mut out: Vec<usize> = [100, 1000, 10_000].into_iter().filter(|&t| t <= horizon).collect();
    if out.last() != Some(&horizon) {
        out.push(horizon);
    }
    out
}

/// Compact per-repetition record kept after traces are written out.
#[derive(Debug, Clone)]
pub struct RepOutcome {
    pub rep: usize,
    pub algos: Vec<AlgoOutcome>,
}

#[derive(Debug, Clone)]
pub struct AlgoOutcome {
    pub algo: Algorithm,
    /// Cumulative regret at each of the report's checkpoints.
    pub regret: Vec<f64>,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algo: Algorithm,
    pub checkpoint_t: usize,
    pub regret_mean: f64,
    pub regret_std: f64,
    pub runtime_mean_s: f64,
    pub runtime_std_s: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub checkpoints: Vec<usize>,
    pub outcomes: Vec<RepOutcome>,
    pub summary: Vec<SummaryRow>,
    pub rounds_path: Option<PathBuf>,
    pub summary_path: Option<PathBuf>,
}

impl ExperimentReport {
    fn from_outcomes(cfg: &ExperimentConfig, checkpoints: Vec<usize>, outcomes: Vec<RepOutcome>) -> Self {
        let mut summary = Vec::new();
        for &algo in &cfg.algorithms {
            let runs: Vec<&AlgoOutcome> =
                outcomes.iter().flat_map(|o| o.algos.iter().filter(move |a| a.algo == algo)).collect();
            let runtimes: Vec<f64> = runs.iter().map(|r| r.runtime_s).collect();
            for (c, &t) in checkpoints.iter().enumerate() {
                let regrets: Vec<f64> = runs.iter().map(|r| r.regret[c]).collect();
                summary.push(SummaryRow {
                    algo,
                    checkpoint_t: t,
                    regret_mean: mean(&regrets),
                    regret_std: sample_std(&regrets),
                    runtime_mean_s: mean(&runtimes),
                    runtime_std_s: sample_std(&runtimes),
                });
            }
        }
        Self { checkpoints, outcomes, summary, rounds_path: None, summary_path: None }
    }

    /// Per-repetition cumulative regret of `algo` at round `t`, which must
    /// be one of the checkpoints.
    pub fn regret_at(&self, algo: Algorithm, t: usize) -> Vec<f64> {
        let c = self.checkpoints.iter().position(|&x| x == t).expect("not a checkpoint");
        self.per_algo(algo, |a| a.regret[c])
    }

    pub fn final_regret(&self, algo: Algorithm) -> Vec<f64> {
        self.per_algo(algo, |a| *a.regret.last().expect("at least one checkpoint"))
    }

    pub fn runtimes(&self, algo: Algorithm) -> Vec<f64> {
        self.per_algo(algo, |a| a.runtime_s)
    }

    fn per_algo(&self, algo: Algorithm, f: impl Fn(&AlgoOutcome) -> f64) -> Vec<f64> {
        self.outcomes.iter().flat_map(|o| o.algos.iter().filter(|a| a.algo == algo).map(&f)).collect()
    }
}

fn thread_pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config("threads", e.to_string()))
}

/// Runs all repetitions on a worker pool and hands each to `sink` in
/// repetition order, as soon as every earlier repetition is done.
pub fn drive_repetitions<F>(cfg: &ExperimentConfig, master: u64, mut sink: F) -> CliResult<Vec<RepOutcome>>
where
    F: FnMut(usize, &[AlgoRun]) -> CliResult<()>,
{
    let pool = thread_pool(cfg.threads)?;
    let checkpoints = checkpoints(cfg.run.horizon);
    let cancel = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, CliResult<Vec<AlgoRun>>)>();

    let mut outcomes = Vec::with_capacity(cfg.repetitions);
    let mut first_error: Option<CliError> = None;
    std::thread::scope(|scope| {
        let cancel = &cancel;
        scope.spawn(move || {
            pool.install(|| {
                (0..cfg.repetitions).into_par_iter().for_each_with(tx, |tx, rep| {
                    if cancel.load(Ordering::Relaxed) {
                        return;
                    }
                    let _ = tx.send((rep, run_repetition(cfg, master, rep)));
                });
            });
        });

        let mut pending: BTreeMap<usize, Vec<AlgoRun>> = BTreeMap::new();
        let mut next = 0;
        for (rep, result) in rx {
            match result {
                Ok(runs) => {
                    pending.insert(rep, runs);
                }
                Err(e) => {
                    cancel.store(true, Ordering::Relaxed);
                    if first_error.is_none() {
                        first_error = Some(e);
                    }
                }
            }
            while first_error.is_none() {
                let Some(runs) = pending.remove(&next) else { break };
                if let Err(e) = sink(next, &runs) {
                    cancel.store(true, Ordering::Relaxed);
                    first_error = Some(e);
                    break;
                }
                let algos = runs
                    .iter()
                    .map(|r| AlgoOutcome {
                        algo: r.algo,
                        regret: checkpoints.iter().map(|&t| r.trace.regret_at(t)).collect(),
                        runtime_s: r.runtime_s,
                    })
                    .collect();
                outcomes.push(RepOutcome { rep: next, algos });
                info!("repetition {next} done");
                next += 1;
            }
        }
    });
    match first_error {
        Some(e) => Err(e),
        None => Ok(outcomes),
    }
}

/// Runs the experiment without writing anything.
pub fn run_in_memory(cfg: &ExperimentConfig) -> CliResult<ExperimentReport> {
    let master = cfg.master_seed()?;
    let outcomes = drive_repetitions(cfg, master, |_, _| Ok(()))?;
    Ok(ExperimentReport::from_outcomes(cfg, checkpoints(cfg.run.horizon), outcomes))
}

/// Runs the experiment, streaming per-round rows to `rounds.csv` and
/// writing `summary.csv` at the end, both under the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<ExperimentReport> {
    let master = cfg.master_seed()?;
    std::fs::create_dir_all(&cfg.output)?;
    let rounds_path = cfg.output.join(ROUNDS_FILE);
    let mut rounds = csv::Writer::from_writer(BufWriter::new(File::create(&rounds_path)?));
    rounds.write_record(ROUNDS_HEADER)?;
    rounds.flush()?;

    let outcomes = drive_repetitions(cfg, master, |rep, runs| {
        for run in runs {
            write_trace(&mut rounds, rep, run.algo, &run.trace)?;
            if let (true, Some(est)) = (cfg.dump_stage1, &run.estimate) {
                dump_estimate(&cfg.output.join(format!("stage1_rep{rep}.txt")), est)?;
            }
        }
        // flushing per repetition keeps completed repetitions on disk
        // if the run is interrupted
        rounds.flush()?;
        Ok(())
    })?;

    let mut report = ExperimentReport::from_outcomes(cfg, checkpoints(cfg.run.horizon), outcomes);
    let summary_path = cfg.output.join(SUMMARY_FILE);
    write_summary(&summary_path, &report.summary)?;
    report.rounds_path = Some(rounds_path);
    report.summary_path = Some(summary_path);
    Ok(report)
}

fn write_trace<W: Write>(w: &mut csv::Writer<W>, rep: usize, algo: Algorithm, trace: &RegretTrace) -> CliResult<()> {
    for t in 0..trace.rounds() {
        w.write_record([
            rep.to_string(),
            algo.name().to_string(),
            (t + 1).to_string(),
            trace.chosen[t].to_string(),
            trace.instant[t].to_string(),
            trace.cumulative[t].to_string(),
        ])?;
    }
    Ok(())
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.algo.name().to_string(),
            r.checkpoint_t.to_string(),
            r.regret_mean.to_string(),
            r.regret_std.to_string(),
            r.runtime_mean_s.to_string(),
            r.runtime_std_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text dump: the estimate row by row, then the leading direction.
fn dump_estimate(path: &Path, est: &ThetaEstimate) -> CliResult<()> {
    let n = est.n();
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# theta_hat {n}x{n}, lambda {}", est.lambda_used)?;
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| est.theta_hat.get(i, j).to_string()).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    writeln!(out, "# s_hat")?;
    let s: Vec<String> = est.s_hat.iter().map(|x| x.to_string()).collect();
    writeln!(out, "{}", s.join(" "))?;
    out.flush()?;
    Ok(())
}

/// Wall-clock seconds of `f`.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let clock = Instant::now();
    let out = f();
    (out, clock.elapsed().as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentArgs;

    fn small(reps: usize) -> ExperimentConfig {
        ExperimentArgs {
            n: Some(6),
            arms: Some(8),
            horizon: Some(120),
            repetitions: Some(reps),
            seed: Some(5),
            ..Default::default()
        }
        .resolve()
        .unwrap()
    }

    #[test]
    fn checkpoint_sets() {
        assert_eq!(checkpoints(10_000), vec![100, 1000, 10_000]);
        assert_eq!(checkpoints(200), vec![100, 200]);
        assert_eq!(checkpoints(50), vec![50]);
        assert_eq!(checkpoints(1000), vec![100, 1000]);
    }

    #[test]
    fn instances_are_shared_across_algorithms() {
        let cfg = small(1);
        let a = build_instance(&cfg, 5, 0).unwrap();
        let b = build_instance(&cfg, 5, 0).unwrap();
        assert_eq!(a.env.innate(), b.env.innate());
        for (x, y) in a.arms.iter().zip(b.arms.iter()) {
            assert_eq!(x.laplacian, y.laplacian);
        }
        let c = build_instance(&cfg, 5, 1).unwrap();
        assert_ne!(a.env.innate(), c.env.innate());
    }

    #[test]
    fn summary_has_one_row_per_algo_and_checkpoint() {
        let report = run_in_memory(&small(3)).unwrap();
        assert_eq!(report.outcomes.len(), 3);
        assert_eq!(report.summary.len(), 3 * 2);
        assert!(report.outcomes.iter().enumerate().all(|(i, o)| o.rep == i));
        let oracle = report.final_regret(Algorithm::Oracle);
        assert_eq!(oracle.len(), 3);
        assert!(oracle.iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn missing_seed_is_a_config_error() {
        let mut cfg = small(1);
        cfg.seed = None;
        assert!(matches!(run_in_memory(&cfg), Err(CliError::Config { .. })));
    }
}
