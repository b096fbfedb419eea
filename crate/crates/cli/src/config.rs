//! Experiment configuration: defaults, then an optional TOML file, then
//! command-line flags, each layer overriding the previous one.

use std::path::{Path, PathBuf};

use clap::Args;
use log::warn;
use serde::Deserialize;

use opdmin_core::arms::{EditConfig, GraphFamily};
use opdmin_core::graph::{load_edge_list, WeightedGraph};
use opdmin_core::opinion::OpinionMode;
use opdmin_core::stage1::{ExploreMode, LambdaMode};
use opdmin_core::stage2::{BetaRule, LambdaRule, LxMode, RunConfig};

use crate::error::{CliError, CliResult};

/// Largest vectorized dimension `n²` for which full-dimensional OFUL runs.
pub const DEFAULT_FULL_OFUL_MAX_DIM: usize = 4096;

/// Overridable experiment settings. Every field is optional so that the
/// same struct serves as a config-file schema and as the flag set.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentArgs {
    /// Read settings from a TOML file; flags given on the command line win.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Base graph: er, sbm or file.
    #[arg(long)]
    pub graph: Option<String>,
    /// Edge probability of the ER family.
    #[arg(long)]
    pub edge_p: Option<f64>,
    /// Share of nodes in the first SBM community.
    #[arg(long)]
    pub sbm_frac1: Option<f64>,
    #[arg(long)]
    pub sbm_p_in: Option<f64>,
    #[arg(long)]
    pub sbm_p_out: Option<f64>,
    /// Edge list for `--graph file`.
    #[arg(long, value_name = "PATH")]
    pub graph_path: Option<PathBuf>,

    /// Number of nodes.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of arms K.
    #[arg(long)]
    pub arms: Option<usize>,
    /// Arm regime: local (edge edits of the base graph) or diverse.
    #[arg(long)]
    pub regime: Option<String>,
    /// Edge edits per local arm; defaults to n.
    #[arg(long)]
    pub num_edits: Option<usize>,
    #[arg(long)]
    pub weight_lo: Option<f64>,
    #[arg(long)]
    pub weight_hi: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub allow_edge_removal: Option<bool>,

    /// Innate opinions: uniform or polarized.
    #[arg(long)]
    pub opinions: Option<String>,
    /// Observation noise standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Horizon T.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Exploration length rule: sqrt, theory or explicit.
    #[arg(long)]
    pub t1_rule: Option<String>,
    /// Exploration length for the explicit rule.
    #[arg(long)]
    pub t1: Option<usize>,
    /// Lower bound on ‖s‖² for the theory rule.
    #[arg(long)]
    pub ell_s: Option<f64>,
    /// Curvature constant for the theory rule.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,

    /// Ridge parameter of the refinement stage.
    #[arg(long)]
    pub lambda_reg: Option<f64>,
    /// Nuclear-norm weight schedule: theory or experiment.
    #[arg(long)]
    pub lambda_mode: Option<String>,
    /// Multiply the nuclear-norm weight by sigma.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub lambda_noise_scaled: Option<bool>,
    #[arg(long)]
    pub lambda_multiplier: Option<f64>,
    /// Double-center the exploration design before estimation.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub centered: Option<bool>,
    /// Feature-norm bound: derived (sqrt n) or conservative (n).
    #[arg(long)]
    pub lx_mode: Option<String>,
    /// Parameter-norm bound; defaults to n.
    #[arg(long)]
    pub s_bound: Option<f64>,
    /// Confidence radius: determinant, dimensional or fixed:<value>.
    #[arg(long)]
    pub beta_rule: Option<String>,
    /// auto, with-replacement or without-replacement.
    #[arg(long)]
    pub explore_mode: Option<String>,
    /// Feed exploration samples into the refinement stage.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub warm_start: Option<bool>,
    #[arg(long)]
    pub refresh_every: Option<usize>,

    /// Comma-separated subset of estr, full_oful, oracle.
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<String>>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub output: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Refuse full OFUL above this vectorized dimension.
    #[arg(long)]
    pub full_oful_max_dim: Option<usize>,
    /// Write each repetition's estimate and direction to the output directory.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub dump_stage1: Option<bool>,
    /// shared: every algorithm replays the same noise seed; independent:
    /// one seed per algorithm.
    #[arg(long)]
    pub noise_pairing: Option<String>,
}

macro_rules! overlay {
    ($base:ident, $over:ident; $($field:ident),* $(,)?) => {
        ExperimentArgs { $($field: $over.$field.or($base.$field),)* }
    };
}

impl ExperimentArgs {
    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: ExperimentArgs) -> ExperimentArgs {
        let base = self;
        overlay!(base, over;
            config, graph, edge_p, sbm_frac1, sbm_p_in, sbm_p_out, graph_path,
            n, arms, regime, num_edits, weight_lo, weight_hi, allow_edge_removal,
            opinions, sigma, horizon, t1_rule, t1, ell_s, kappa, delta,
            lambda_reg, lambda_mode, lambda_noise_scaled, lambda_multiplier, centered,
            lx_mode, s_bound, beta_rule, explore_mode, warm_start, refresh_every,
            algorithms, repetitions, seed, output, threads, full_oful_max_dim,
            dump_stage1, noise_pairing,
        )
    }

    pub fn from_toml(text: &str) -> CliResult<ExperimentArgs> {
        toml::from_str(text).map_err(|e| CliError::config("config", e.to_string()))
    }

    pub fn from_file(path: &Path) -> CliResult<ExperimentArgs> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies the config file named by `--config`, if any, underneath
    /// the flags.
    pub fn with_config_file(self) -> CliResult<ExperimentArgs> {
        match &self.config {
            Some(path) => Ok(Self::from_file(path)?.overlay(self)),
            None => Ok(self),
        }
    }

    /// Validates and fills defaults.
    pub fn resolve(&self) -> CliResult<ExperimentConfig> {
        ExperimentConfig::resolve(self)
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, value: &Option<String>, default: T) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    match value {
        Some(v) => v.parse().map_err(|e: T::Err| CliError::config(field, e.to_string())),
        None => Ok(default),
    }
}

fn check(ok: bool, field: &str, message: impl FnOnce() -> String) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(field, message()))
    }
}

fn probability(field: &str, p: f64) -> CliResult<f64> {
    check((0.0..=1.0).contains(&p), field, || format!("must lie in [0, 1], got {p}"))?;
    Ok(p)
}

#[derive(Debug, Clone)]
pub enum GraphSource {
    Random(GraphFamily),
    File { path: PathBuf, graph: WeightedGraph },
}

impl GraphSource {
    pub fn label(&self) -> &'static str {
        match self {
            GraphSource::Random(GraphFamily::ErdosRenyi { .. }) => "er",
            GraphSource::Random(GraphFamily::Sbm { .. }) => "sbm",
            GraphSource::File { .. } => "file",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Local,
    Diverse,
}

impl std::str::FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "local" => Ok(Regime::Local),
            "diverse" => Ok(Regime::Diverse),
            other => Err(format!("expected local or diverse, got {other:?}")),
        }
    }
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Local => "local",
            Regime::Diverse => "diverse",
        }
    }
}

/// How the exploration length is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum T1Rule {
    /// `round(sqrt T)`.
    Sqrt,
    /// `6/(ℓ_s κ) · sqrt(T ln(2n/δ))`.
    Theory { ell_s: f64, kappa: f64 },
    Explicit(usize),
}

impl T1Rule {
    /// Exploration length clamped to `[1, T]`.
    pub fn resolve(self, horizon: usize, n: usize, delta: f64) -> usize {
        let raw = match self {
            T1Rule::Sqrt => (horizon as f64).sqrt().round(),
            T1Rule::Theory { ell_s, kappa } => {
                (6.0 / (ell_s * kappa) * (horizon as f64 * (2.0 * n as f64 / delta).ln()).sqrt()).ceil()
            }
            T1Rule::Explicit(t1) => t1 as f64,
        };
        if raw.is_finite() {
            (raw as usize).clamp(1, horizon.max(1))
        } else {
            horizon.max(1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Estr,
    FullOful,
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Estr, Algorithm::FullOful, Algorithm::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Estr => "estr",
            Algorithm::FullOful => "full_oful",
            Algorithm::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "estr" => Ok(Algorithm::Estr),
            "full_oful" | "full-oful" => Ok(Algorithm::FullOful),
            "oracle" => Ok(Algorithm::Oracle),
            other => Err(format!("unknown algorithm {other:?} (expected estr, full_oful or oracle)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoisePairing {
    Shared,
    Independent,
}

impl std::str::FromStr for NoisePairing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "shared" => Ok(NoisePairing::Shared),
            "independent" => Ok(NoisePairing::Independent),
            other => Err(format!("expected shared or independent, got {other:?}")),
        }
    }
}

/// Fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub n: usize,
    pub arms: usize,
    pub regime: Regime,
    pub edits: EditConfig,
    /// Explicit edit count; when absent local arms get `n` edits.
    pub num_edits: Option<usize>,
    pub opinions: OpinionMode,
    pub sigma: f64,
    pub t1_rule: T1Rule,
    /// Horizon, exploration length and learner settings.
    pub run: RunConfig,
    pub algorithms: Vec<Algorithm>,
    pub repetitions: usize,
    pub seed: Option<u64>,
    pub output: PathBuf,
    pub threads: Option<usize>,
    pub full_oful_max_dim: usize,
    pub dump_stage1: bool,
    pub noise_pairing: NoisePairing,
}

impl ExperimentConfig {
    /// The headline setting: ER base graph, n = 16, K = 100 local arms,
    /// σ = 0.1, T = 10 000, T1 = sqrt T, every algorithm.
    pub fn defaults() -> ExperimentConfig {
        ExperimentArgs::default().resolve().expect("defaults are valid")
    }

    fn resolve(a: &ExperimentArgs) -> CliResult<ExperimentConfig> {
        let graph_kind = a.graph.clone().unwrap_or_else(|| "er".into());
        let graph = match graph_kind.as_str() {
            "er" => GraphSource::Random(GraphFamily::ErdosRenyi { p: probability("edge-p", a.edge_p.unwrap_or(0.2))? }),
            "sbm" => {
                let frac1 = a.sbm_frac1.unwrap_or(0.75);
                check(frac1 > 0.0 && frac1 < 1.0, "sbm-frac1", || format!("must lie in (0, 1), got {frac1}"))?;
                GraphSource::Random(GraphFamily::Sbm {
                    frac1,
                    p_in: probability("sbm-p-in", a.sbm_p_in.unwrap_or(0.5))?,
                    p_out: probability("sbm-p-out", a.sbm_p_out.unwrap_or(0.07))?,
                })
            }
            "file" => {
                let path = a
                    .graph_path
                    .clone()
                    .ok_or_else(|| CliError::config("graph-path", "required when graph = file"))?;
                let graph = load_edge_list(&path)
                    .map_err(|e| CliError::config("graph-path", format!("{}: {e}", path.display())))?;
                GraphSource::File { path, graph }
            }
            other => return Err(CliError::config("graph", format!("expected er, sbm or file, got {other:?}"))),
        };

        let n = match (&graph, a.n) {
            (GraphSource::File { graph, .. }, Some(n)) if n != graph.n() => {
                return Err(CliError::config("n", format!("edge list has {} nodes, but n = {n}", graph.n())))
            }
            (GraphSource::File { graph, .. }, _) => graph.n(),
            (_, n) => n.unwrap_or(16),
        };
        check(n >= 2, "n", || format!("need at least 2 nodes, got {n}"))?;

        let arms = a.arms.unwrap_or(100);
        check(arms >= 1, "arms", || "need at least one arm".into())?;
        let regime = parse_field("regime", &a.regime, Regime::Local)?;
        if regime == Regime::Diverse && matches!(graph, GraphSource::File { .. }) {
            return Err(CliError::config("regime", "diverse arms need a random graph family (er or sbm)"));
        }
        let edits = EditConfig {
            num_edits: a.num_edits.unwrap_or(n),
            weight_lo: a.weight_lo.unwrap_or(0.5),
            weight_hi: a.weight_hi.unwrap_or(1.5),
            allow_removal: a.allow_edge_removal.unwrap_or(false),
        };
        check(edits.num_edits >= 1, "num-edits", || "must be at least 1".into())?;
        check(edits.weight_lo > 0.0 && edits.weight_lo <= edits.weight_hi, "weight-lo", || {
            format!("need 0 < weight-lo <= weight-hi, got [{}, {}]", edits.weight_lo, edits.weight_hi)
        })?;

        let opinions = parse_field("opinions", &a.opinions, OpinionMode::Uniform)?;
        let sigma = a.sigma.unwrap_or(0.1);
        check(sigma >= 0.0 && sigma.is_finite(), "sigma", || format!("must be >= 0, got {sigma}"))?;
        let horizon = a.horizon.unwrap_or(10_000);
        check(horizon >= 1, "horizon", || "must be at least 1".into())?;
        let delta = a.delta.unwrap_or(0.001);
        check(delta > 0.0 && delta < 1.0, "delta", || format!("must lie in (0, 1), got {delta}"))?;

        let rule_name = a.t1_rule.clone().unwrap_or_else(|| if a.t1.is_some() { "explicit" } else { "sqrt" }.into());
        let t1_rule = match rule_name.as_str() {
            "sqrt" => T1Rule::Sqrt,
            "explicit" => {
                let t1 = a.t1.ok_or_else(|| CliError::config("t1", "required by t1-rule = explicit"))?;
                check(t1 >= 1 && t1 <= horizon, "t1", || format!("need 1 <= t1 <= horizon = {horizon}, got {t1}"))?;
                T1Rule::Explicit(t1)
            }
            "theory" => {
                let ell_s = a.ell_s.ok_or_else(|| CliError::config("ell-s", "required by t1-rule = theory"))?;
                let kappa = a.kappa.ok_or_else(|| CliError::config("kappa", "required by t1-rule = theory"))?;
                check(ell_s > 0.0, "ell-s", || format!("must be > 0, got {ell_s}"))?;
                check(kappa > 0.0, "kappa", || format!("must be > 0, got {kappa}"))?;
                T1Rule::Theory { ell_s, kappa }
            }
            other => return Err(CliError::config("t1-rule", format!("expected sqrt, theory or explicit, got {other:?}"))),
        };
        let t1 = t1_rule.resolve(horizon, n, delta);

        let mut lambda_rule = LambdaRule::default();
        lambda_rule.mode = parse_field("lambda-mode", &a.lambda_mode, LambdaMode::Experiment)?;
        lambda_rule.noise_scaled = a.lambda_noise_scaled.unwrap_or(lambda_rule.noise_scaled);
        lambda_rule.multiplier = a.lambda_multiplier.unwrap_or(lambda_rule.multiplier);
        check(lambda_rule.multiplier >= 0.0, "lambda-multiplier", || "must be >= 0".into())?;

        let mut run = RunConfig { horizon, t1, delta, lambda_rule, ..RunConfig::default() };
        run.prox.centered = a.centered.unwrap_or(run.prox.centered);
        run.lambda_reg = a.lambda_reg.unwrap_or(run.lambda_reg);
        check(run.lambda_reg > 0.0, "lambda-reg", || format!("must be > 0, got {}", run.lambda_reg))?;
        run.lx_mode = parse_field("lx-mode", &a.lx_mode, LxMode::Derived)?;
        run.s_bound = a.s_bound;
        if let Some(s) = run.s_bound {
            check(s >= 0.0, "s-bound", || format!("must be >= 0, got {s}"))?;
        }
        run.beta_rule = parse_field("beta-rule", &a.beta_rule, BetaRule::Determinant)?;
        run.explore_mode = parse_field("explore-mode", &a.explore_mode, ExploreMode::Auto)?;
        run.warm_start = a.warm_start.unwrap_or(false);
        run.refresh_every = a.refresh_every.unwrap_or(run.refresh_every);

        let algorithms = match &a.algorithms {
            None => Algorithm::ALL.to_vec(),
            Some(list) => {
                let mut out = Vec::new();
                for name in list {
                    let algo: Algorithm = name.parse().map_err(|e: String| CliError::config("algorithms", e))?;
                    if !out.contains(&algo) {
                        out.push(algo);
                    }
                }
                check(!out.is_empty(), "algorithms", || "at least one algorithm is required".into())?;
                out
            }
        };
        let full_oful_max_dim = a.full_oful_max_dim.unwrap_or(DEFAULT_FULL_OFUL_MAX_DIM);
        if algorithms.contains(&Algorithm::FullOful) && n * n > full_oful_max_dim {
            return Err(CliError::config(
                "algorithms",
                format!("full_oful at n = {n} needs dimension {} > full-oful-max-dim = {full_oful_max_dim}", n * n),
            ));
        }

        let repetitions = a.repetitions.unwrap_or(100);
        check(repetitions >= 1, "repetitions", || "must be at least 1".into())?;
        if let Some(t) = a.threads {
            check(t >= 1, "threads", || "must be at least 1".into())?;
        }
        if n > 1024 {
            warn!("graph has {n} nodes, beyond the sizes this simulator targets");
        }

        Ok(ExperimentConfig {
            graph,
            n,
            arms,
            regime,
            edits,
            num_edits: a.num_edits,
            opinions,
            sigma,
            t1_rule,
            run,
            algorithms,
            repetitions,
            seed: a.seed,
            output: a.output.clone().unwrap_or_else(|| PathBuf::from("results")),
            threads: a.threads,
            full_oful_max_dim,
            dump_stage1: a.dump_stage1.unwrap_or(false),
            noise_pairing: parse_field("noise-pairing", &a.noise_pairing, NoisePairing::Shared)?,
        })
    }

    pub fn master_seed(&self) -> CliResult<u64> {
        self.seed.ok_or_else(|| CliError::config("seed", "a master seed is required (--seed)"))
    }

    /// Family used to draw diverse arms; a file base graph has none.
    pub fn family(&self) -> Option<GraphFamily> {
        match self.graph {
            GraphSource::Random(f) => Some(f),
            GraphSource::File { .. } => None,
        }
    }

    /// Re-derives the exploration length after `horizon` or `n` changed.
    pub fn refresh_t1(&mut self) {
        self.run.t1 = self.t1_rule.resolve(self.run.horizon, self.n, self.run.delta);
    }

    /// Moves the experiment to `n` nodes, keeping derived defaults in step.
    pub fn set_n(&mut self, n: usize) -> CliResult<()> {
        check(n >= 2, "n", || format!("need at least 2 nodes, got {n}"))?;
        if let GraphSource::File { graph, .. } = &self.graph {
            check(graph.n() == n, "n", || format!("edge list has {} nodes, but n = {n}", graph.n()))?;
        }
        self.n = n;
        self.edits.num_edits = self.num_edits.unwrap_or(n);
        self.refresh_t1();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_experimental_table() {
        let c = ExperimentConfig::defaults();
        assert_eq!((c.n, c.arms, c.run.horizon, c.run.t1), (16, 100, 10_000, 100));
        assert_eq!(c.sigma, 0.1);
        assert_eq!(c.run.delta, 0.001);
        assert_eq!(c.run.lambda_reg, 0.1);
        assert_eq!(c.edits.num_edits, 16);
        assert_eq!(c.algorithms, Algorithm::ALL.to_vec());
        assert!(c.seed.is_none());
    }

    #[test]
    fn file_then_flags_precedence() {
        let file = ExperimentArgs::from_toml("n = 8\nsigma = 1.0\nalgorithms = [\"estr\"]\n").unwrap();
        let flags = ExperimentArgs { sigma: Some(0.5), ..Default::default() };
        let c = file.overlay(flags).resolve().unwrap();
        assert_eq!(c.n, 8);
        assert_eq!(c.sigma, 0.5);
        assert_eq!(c.algorithms, vec![Algorithm::Estr]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(ExperimentArgs::from_toml("colour = 3"), Err(CliError::Config { .. })));
    }

    #[test]
    fn errors_name_the_field() {
        let cases: Vec<(ExperimentArgs, &str)> = vec![
            (ExperimentArgs { sigma: Some(-1.0), ..Default::default() }, "sigma"),
            (ExperimentArgs { delta: Some(1.0), ..Default::default() }, "delta"),
            (ExperimentArgs { repetitions: Some(0), ..Default::default() }, "repetitions"),
            (ExperimentArgs { t1: Some(20), horizon: Some(10), ..Default::default() }, "t1"),
            (ExperimentArgs { regime: Some("wide".into()), ..Default::default() }, "regime"),
            (ExperimentArgs { algorithms: Some(vec!["ucb".into()]), ..Default::default() }, "algorithms"),
            (ExperimentArgs { t1_rule: Some("theory".into()), ..Default::default() }, "ell-s"),
            (ExperimentArgs { n: Some(128), ..Default::default() }, "algorithms"),
        ];
        for (args, field) in cases {
            match args.resolve() {
                Err(CliError::Config { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected config error on {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn t1_rules() {
        assert_eq!(T1Rule::Sqrt.resolve(10_000, 16, 0.001), 100);
        assert_eq!(T1Rule::Sqrt.resolve(200, 8, 0.001), 14);
        assert_eq!(T1Rule::Explicit(7).resolve(100, 8, 0.001), 7);
        // 6·sqrt(10⁴·ln(32000)) ≈ 1932.47
        let t = T1Rule::Theory { ell_s: 1.0, kappa: 1.0 }.resolve(10_000, 16, 0.001);
        assert_eq!(t, 1933);
        assert_eq!(T1Rule::Theory { ell_s: 1.0, kappa: 1e-9 }.resolve(500, 16, 0.001), 500);
    }
}
