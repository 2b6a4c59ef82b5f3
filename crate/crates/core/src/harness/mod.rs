//! Training and test orchestration.
//!
//! Training draws `train_samples` variations of a base instance, solves each
//! without hints and keeps what the predictors need. Testing draws a fresh set
//! of variations, runs every roster method on each of them and summarizes the
//! runs per method. Every method sees the same variations, and the `zero`
//! method always runs first so that gaps are measured on the same variation.

mod method;
mod metrics;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use method::{AffineVariant, Method, MethodError};
pub use metrics::{nearest_rank, summarize, write_csv, MetricsRow, RunRecord};

use crate::formulation::{Hyperplane, HyperplaneKind};
use crate::learn::{
    fit_affine_predictor, predict_transmission, predict_warm_start, AffinePredictor, LearnError,
    TrainingRecord, TrainingStore, TransmissionPredictorConfig, WarmStartMode,
    WarmStartPredictorConfig,
};
use crate::powergrid::{load_instance, InstanceError, KeyRecord, UCInstance, HORIZON};
use crate::sampling::{
    fit_profile_stats, generate_variation, read_reference_loads, ParameterVector, ProfileStats,
    SamplingError, ShiftSpec,
};
use crate::sensitivity::{ScreeningConfig, SensitivityError, Sensitivities};
use crate::solve::{
    solve_scuc, BackendOptions, HighsBackend, Hints, SolveError, SolveOptions, SolveOutcome,
    WarmStart,
};

/// Caps the number of concurrent training solves.
pub const WORKERS_ENV: &str = "SCUC_LAB_WORKERS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
    #[error("{method} failed on the variation with seed {seed}: {source}")]
    Solve {
        method: String,
        seed: u64,
        source: SolveError,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// True for failures of the optimization itself rather than of the inputs.
    pub fn is_solve_failure(&self) -> bool {
        matches!(self, HarnessError::Solve { .. })
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Settings for a training/test campaign. Relative paths are resolved against
/// the directory holding the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub base: PathBuf,
    /// Ratio statistics (`.json`) or reference daily loads (`.csv`). Without
    /// one, variations keep the base load shape.
    #[serde(default)]
    pub profile: Option<PathBuf>,
    #[serde(default = "default_train_samples")]
    pub train_samples: usize,
    #[serde(default = "default_test_samples")]
    pub test_samples: usize,
    #[serde(default)]
    pub train_seed: u64,
    #[serde(default = "default_test_seed")]
    pub test_seed: u64,
    #[serde(default)]
    pub shift: Option<ShiftSpec>,
    /// Distribution of the test variations; defaults to `shift`.
    #[serde(default)]
    pub test_shift: Option<ShiftSpec>,
    pub roster: Vec<Method>,
    #[serde(default = "BackendOptions::training")]
    pub train_backend: BackendOptions,
    #[serde(default = "BackendOptions::test")]
    pub test_backend: BackendOptions,
    #[serde(default)]
    pub screening: ScreeningConfig,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Later training samples get transmission hints from earlier ones.
    #[serde(default)]
    pub online: bool,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_test_workers")]
    pub test_workers: usize,
    /// Where `train` writes the store.
    #[serde(default = "default_store")]
    pub store: PathBuf,
    /// Where `test` writes `metrics.json` and `metrics.csv`.
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_train_samples() -> usize {
    300
}
fn default_test_samples() -> usize {
    50
}
fn default_test_seed() -> u64 {
    1_000_000
}
fn default_max_iterations() -> usize {
    50
}
fn default_test_workers() -> usize {
    1
}
fn default_store() -> PathBuf {
    PathBuf::from("store")
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(base: impl Into<PathBuf>, roster: Vec<Method>) -> Self {
        ExperimentConfig {
            base: base.into(),
            profile: None,
            train_samples: default_train_samples(),
            test_samples: default_test_samples(),
            train_seed: 0,
            test_seed: default_test_seed(),
            shift: None,
            test_shift: None,
            roster,
            train_backend: BackendOptions::training(),
            test_backend: BackendOptions::test(),
            screening: ScreeningConfig::default(),
            max_iterations: default_max_iterations(),
            online: false,
            workers: None,
            test_workers: default_test_workers(),
            store: default_store(),
            output: default_output(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io(path))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        resolve(&mut cfg.base);
        if let Some(p) = cfg.profile.as_mut() {
            resolve(p);
        }
        resolve(&mut cfg.store);
        resolve(&mut cfg.output);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.train_samples < 1 || self.test_samples < 1 {
            return bad("sample counts must be at least 1".into());
        }
        if self.roster.is_empty() {
            return bad("the roster is empty".into());
        }
        for opts in [&self.train_backend, &self.test_backend] {
            if !(opts.relative_gap > 0.0) {
                return bad(format!("relative gap {} must be positive", opts.relative_gap));
            }
        }
        if self.max_iterations < 1 || self.test_workers < 1 {
            return bad("iteration cap and test workers must be at least 1".into());
        }
        for m in &self.roster {
            let k = match *m {
                Method::TrKnn { k, .. } | Method::WsKnn { k, .. } => k,
                Method::WsCollect { n } => n,
                _ => 1,
            };
            if k > self.train_samples {
                return bad(format!("{m} needs more than {} training samples", self.train_samples));
            }
        }
        for spec in [&self.shift, &self.test_shift].into_iter().flatten() {
            spec.validate()?;
        }
        Ok(())
    }

    fn train_spec(&self) -> ShiftSpec {
        self.shift.unwrap_or_else(|| self.default_spec())
    }

    fn test_spec(&self) -> ShiftSpec {
        self.test_shift.unwrap_or_else(|| self.train_spec())
    }

    fn default_spec(&self) -> ShiftSpec {
        let mut spec = ShiftSpec::in_distribution();
        if self.profile.is_none() {
            spec.ratios = crate::sampling::RatioSource::Base;
        }
        spec
    }

    fn solve_options(&self, backend: BackendOptions) -> SolveOptions {
        SolveOptions {
            backend,
            screening: self.screening,
            max_iterations: self.max_iterations,
        }
    }

    pub fn train_seeds(&self) -> Vec<u64> {
        (0..self.train_samples as u64).map(|i| self.train_seed + i).collect()
    }

    pub fn test_seeds(&self) -> Vec<u64> {
        (0..self.test_samples as u64).map(|i| self.test_seed + i).collect()
    }
}

/// Loads ratio statistics from JSON, or fits them to a CSV of daily loads.
pub fn load_profile(path: &Path) -> Result<ProfileStats, HarnessError> {
    let file = fs::File::open(path).map_err(io(path))?;
    let stats = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        fit_profile_stats(&read_reference_loads(file)?)?
    } else {
        let stats: ProfileStats = serde_json::from_reader(file)?;
        stats.validate()?;
        stats
    };
    Ok(stats)
}

/// Everything a campaign needs besides the configuration itself.
#[derive(Debug)]
pub struct Campaign {
    pub config: ExperimentConfig,
    pub base: UCInstance,
    pub sens: Sensitivities,
    pub profile: ProfileStats,
}

impl Campaign {
    pub fn new(config: ExperimentConfig, base: UCInstance, profile: Option<ProfileStats>) -> Result<Self, HarnessError> {
        config.validate()?;
        let sens = Sensitivities::new(&base.network)?;
        // Without measured statistics the base curve is reused, so these
        // placeholder values are never sampled.
        let profile = profile.unwrap_or(ProfileStats {
            mean: vec![1.0; HORIZON - 1],
            std_dev: vec![0.0; HORIZON - 1],
        });
        Ok(Campaign {
            config,
            base,
            sens,
            profile,
        })
    }

    pub fn from_config(config: ExperimentConfig) -> Result<Self, HarnessError> {
        let base = load_instance(&config.base)?;
        let profile = config.profile.as_deref().map(load_profile).transpose()?;
        Self::new(config, base, profile)
    }

    fn variation(&self, spec: &ShiftSpec, seed: u64) -> Result<(ParameterVector, UCInstance), HarnessError> {
        Ok(generate_variation(&self.base, &self.profile, spec, seed)?)
    }

    fn solve(
        &self,
        method: Method,
        seed: u64,
        instance: &UCInstance,
        hints: &Hints,
        backend: BackendOptions,
    ) -> Result<SolveOutcome, HarnessError> {
        solve_scuc(
            instance,
            &self.sens,
            hints,
            &self.config.solve_options(backend),
            &HighsBackend,
        )
        .map_err(|source| HarnessError::Solve {
            method: method.to_string(),
            seed,
            source,
        })
    }
}

/// A training store plus the statistics of the solves that built it.
#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub store: TrainingStore,
    pub iterations: Vec<usize>,
}

fn worker_count(configured: Option<usize>) -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let cap = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1);
    let n = configured.unwrap_or(available);
    cap.map_or(n, |c| n.min(c)).max(1)
}

/// Solves the training variations and collects them into a store.
pub fn run_training(campaign: &Campaign) -> Result<TrainingOutcome, HarnessError> {
    let cfg = &campaign.config;
    let spec = cfg.train_spec();
    let solve_one = |seed: u64, hints: &Hints| -> Result<(TrainingRecord, usize), HarnessError> {
        let (params, instance) = campaign.variation(&spec, seed)?;
        let out = campaign.solve(Method::Zero, seed, &instance, hints, cfg.train_backend)?;
        log::info!(
            "training seed {seed}: {} iterations, {} keys",
            out.stats.iterations,
            out.enforced.len()
        );
        Ok((
            TrainingRecord {
                seed,
                params,
                enforced: out.enforced,
                solution: out.solution,
            },
            out.stats.iterations,
        ))
    };

    let mut store = TrainingStore::new(&campaign.base);
    let mut iterations = Vec::with_capacity(cfg.train_samples);
    if cfg.online {
        for seed in cfg.train_seeds() {
            let hints = if store.is_empty() {
                Hints::default()
            } else {
                let (params, _) = campaign.variation(&spec, seed)?;
                let tr = TransmissionPredictorConfig::new(store.len());
                Hints {
                    enforce: predict_transmission(&store, &params, &tr)?,
                    ..Hints::default()
                }
            };
            let (record, iters) = solve_one(seed, &hints)?;
            store.records.push(record);
            iterations.push(iters);
        }
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(worker_count(cfg.workers))
            .build()
            .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
        let results = pool.install(|| {
            cfg.train_seeds()
                .into_par_iter()
                .map(|seed| solve_one(seed, &Hints::default()))
                .collect::<Result<Vec<_>, _>>()
        })?;
        for (record, iters) in results {
            store.records.push(record);
            iterations.push(iters);
        }
    }
    Ok(TrainingOutcome { store, iterations })
}

/// Predictors fitted once per test phase.
struct Predictors {
    affine: BTreeMap<AffineVariant, AffinePredictor>,
}

fn transmission_layer(store: &TrainingStore, params: &ParameterVector) -> Result<BTreeSet<crate::powergrid::ConstraintKey>, HarnessError> {
    Ok(predict_transmission(
        store,
        params,
        &TransmissionPredictorConfig::new(store.len()),
    )?)
}

/// Hints for one method on one variation. `reference` is the `zero` run of
/// the same variation.
pub fn build_hints(
    method: Method,
    store: &TrainingStore,
    base: &UCInstance,
    params: &ParameterVector,
    instance: &UCInstance,
    reference: &SolveOutcome,
    affine: Option<&AffinePredictor>,
) -> Result<Hints, HarnessError> {
    let mut hints = Hints::default();
    if method.layered() {
        hints.enforce = transmission_layer(store, params)?;
    }
    match method {
        Method::Zero => {}
        Method::TrNearest => {
            let cfg = TransmissionPredictorConfig { k: 1, p_threshold: 0.0 };
            hints.enforce = predict_transmission(store, params, &cfg)?;
        }
        Method::TrAll => {
            hints.enforce = store
                .records
                .iter()
                .flat_map(|r| r.enforced.iter().copied())
                .collect();
        }
        Method::TrKnn { k, p } => {
            let cfg = TransmissionPredictorConfig { k, p_threshold: p };
            hints.enforce = predict_transmission(store, params, &cfg)?;
        }
        Method::TrPerf => hints.enforce = reference.enforced.clone(),
        Method::WsKnn { k, p } => {
            let cfg = WarmStartPredictorConfig {
                k,
                mode: WarmStartMode::Consensus { p: p / 100.0 },
            };
            hints.warm_starts = predict_warm_start(store, params, &cfg)?;
        }
        Method::WsCollect { n } => {
            let cfg = WarmStartPredictorConfig {
                k: n,
                mode: WarmStartMode::Collect { n },
            };
            hints.warm_starts = predict_warm_start(store, params, &cfg)?;
        }
        Method::WsPerf => {
            hints.warm_starts = vec![WarmStart::from_commitment(&reference.solution.commitment)];
        }
        Method::Aff(_) => {
            let predictor = affine.ok_or_else(|| HarnessError::Config(format!("{method} was not fitted")))?;
            hints.hyperplanes = predictor.predict(base, instance)?;
        }
        Method::AffPerf => {
            hints.hyperplanes = reference
                .solution
                .commitment
                .iter()
                .enumerate()
                .flat_map(|(g, row)| {
                    row.iter().enumerate().map(move |(t, &on)| {
                        let kind = if on { HyperplaneKind::FixOne } else { HyperplaneKind::FixZero };
                        Hyperplane::new(kind, g, t)
                    })
                })
                .collect();
        }
    }
    Ok(hints)
}

fn relative_gap(objective: f64, reference: f64) -> f64 {
    (objective - reference) / reference.abs().max(1e-9)
}

fn run_variation(
    campaign: &Campaign,
    store: &TrainingStore,
    predictors: &Predictors,
    spec: &ShiftSpec,
    seed: u64,
) -> Result<Vec<RunRecord>, HarnessError> {
    let cfg = &campaign.config;
    let (params, instance) = campaign.variation(spec, seed)?;
    let began = Instant::now();
    let zero = campaign.solve(Method::Zero, seed, &instance, &Hints::default(), cfg.test_backend)?;
    let zero_time = began.elapsed().as_secs_f64();
    let zero_objective = zero.solution.objective;
    let mut records = Vec::with_capacity(cfg.roster.len());
    for &method in &cfg.roster {
        if method == Method::Zero {
            records.push(RunRecord {
                method,
                seed,
                feasible: true,
                objective: Some(zero_objective),
                iterations: zero.stats.iterations,
                constraints_per_period: zero.stats.constraints_per_period,
                wall_time: zero_time,
                hint_time: 0.0,
                warm_starts_offered: 0,
                warm_start_accepted: false,
                warm_start_gap: None,
                gap_vs_zero: Some(0.0),
                time_limited: zero.stats.time_limited,
            });
            continue;
        }
        let began = Instant::now();
        let affine = match method {
            Method::Aff(v) => predictors.affine.get(&v),
            _ => None,
        };
        let hints = build_hints(method, store, &campaign.base, &params, &instance, &zero, affine)?;
        // Perfect predictors are charged nothing for their hints.
        let hint_time = if method.uses_reference() {
            0.0
        } else {
            began.elapsed().as_secs_f64()
        };
        let solved = Instant::now();
        let outcome = campaign.solve(method, seed, &instance, &hints, cfg.test_backend);
        let solve_time = solved.elapsed().as_secs_f64();
        let record = match outcome {
            Ok(out) => RunRecord {
                method,
                seed,
                feasible: true,
                objective: Some(out.solution.objective),
                iterations: out.stats.iterations,
                constraints_per_period: out.stats.constraints_per_period,
                wall_time: hint_time + solve_time,
                hint_time,
                warm_starts_offered: hints.warm_starts.len(),
                warm_start_accepted: out.stats.warm_start_accepted,
                warm_start_gap: out.stats.warm_start_gap,
                gap_vs_zero: Some(relative_gap(out.solution.objective, zero_objective)),
                time_limited: out.stats.time_limited,
            },
            Err(HarnessError::Solve {
                source: SolveError::Infeasible { .. },
                ..
            }) if method.is_affine() => RunRecord {
                method,
                seed,
                feasible: false,
                objective: None,
                iterations: 0,
                constraints_per_period: 0.0,
                wall_time: hint_time + solve_time,
                hint_time,
                warm_starts_offered: 0,
                warm_start_accepted: false,
                warm_start_gap: None,
                gap_vs_zero: None,
                time_limited: false,
            },
            Err(e) => return Err(e),
        };
        records.push(record);
    }
    Ok(records)
}

/// Result of a test phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub roster: Vec<Method>,
    pub seeds: Vec<u64>,
    pub rows: Vec<MetricsRow>,
    pub runs: Vec<RunRecord>,
}

/// Runs every roster method on the test variations.
pub fn run_test(campaign: &Campaign, store: &TrainingStore) -> Result<TestReport, HarnessError> {
    let cfg = &campaign.config;
    store.check_base(&campaign.base)?;
    if store.is_empty() {
        return Err(LearnError::EmptyStore.into());
    }
    let mut affine = BTreeMap::new();
    for m in &cfg.roster {
        if let Method::Aff(v) = *m {
            if let std::collections::btree_map::Entry::Vacant(e) = affine.entry(v) {
                e.insert(fit_affine_predictor(store, &campaign.base, &v.config())?);
            }
        }
    }
    let predictors = Predictors { affine };
    let spec = cfg.test_spec();
    let seeds = cfg.test_seeds();
    let per_variation: Vec<Vec<RunRecord>> = if cfg.test_workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.test_workers)
            .build()
            .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
        pool.install(|| {
            seeds
                .par_iter()
                .map(|&s| run_variation(campaign, store, &predictors, &spec, s))
                .collect::<Result<_, _>>()
        })?
    } else {
        seeds
            .iter()
            .map(|&s| run_variation(campaign, store, &predictors, &spec, s))
            .collect::<Result<_, _>>()?
    };
    let runs: Vec<RunRecord> = per_variation.into_iter().flatten().collect();
    Ok(TestReport {
        rows: summarize(&cfg.roster, &runs),
        roster: cfg.roster.clone(),
        seeds,
        runs,
    })
}

/// Configuration echo, seeds and versions written next to a metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub backend: String,
    pub config: Option<ExperimentConfig>,
    pub test_seeds: Vec<u64>,
    pub rows: Vec<MetricsRow>,
}

impl RunManifest {
    pub fn new(report: &TestReport, config: Option<&ExperimentConfig>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            backend: "highs".to_string(),
            config: config.cloned(),
            test_seeds: report.seeds.clone(),
            rows: report.rows.clone(),
        }
    }
}

/// File form of [`Hints`]: generator and line ids, 1-based periods.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HintsDocument {
    #[serde(default)]
    pub enforce: Vec<KeyRecord>,
    /// Each start maps generator ids to 24 values (`true`, `false` or `null`).
    #[serde(default)]
    pub warm_starts: Vec<BTreeMap<String, Vec<Option<bool>>>>,
    #[serde(default)]
    pub hyperplanes: Vec<HyperplaneRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperplaneRecord {
    pub kind: HyperplaneKind,
    pub generator: String,
    pub period: usize,
}

impl HintsDocument {
    pub fn from_hints(hints: &Hints, instance: &UCInstance) -> Self {
        let gid = |g: usize| instance.generators[g].id.clone();
        HintsDocument {
            enforce: hints
                .enforce
                .iter()
                .map(|k| k.to_record(&instance.network))
                .collect(),
            warm_starts: hints
                .warm_starts
                .iter()
                .map(|ws| {
                    ws.values
                        .iter()
                        .enumerate()
                        .map(|(g, row)| (gid(g), row.clone()))
                        .collect()
                })
                .collect(),
            hyperplanes: hints
                .hyperplanes
                .iter()
                .map(|h| HyperplaneRecord {
                    kind: h.kind,
                    generator: gid(h.generator),
                    period: h.period + 1,
                })
                .collect(),
        }
    }

    pub fn resolve(&self, instance: &UCInstance) -> Result<Hints, HarnessError> {
        let generator = |id: &str| {
            instance
                .generators
                .iter()
                .position(|g| g.id == id)
                .ok_or_else(|| HarnessError::Config(format!("hints name unknown generator {id:?}")))
        };
        let enforce = self
            .enforce
            .iter()
            .map(|k| k.resolve(&instance.network))
            .collect::<Result<BTreeSet<_>, _>>()
            .map_err(InstanceError::from)?;
        let mut warm_starts = Vec::with_capacity(self.warm_starts.len());
        for doc in &self.warm_starts {
            let mut ws = WarmStart::empty(instance.generators.len());
            for (id, values) in doc {
                if values.len() != HORIZON {
                    return Err(HarnessError::Config(format!(
                        "warm start for {id:?} has {} values",
                        values.len()
                    )));
                }
                ws.values[generator(id)?] = values.clone();
            }
            warm_starts.push(ws);
        }
        let hyperplanes = self
            .hyperplanes
            .iter()
            .map(|h| {
                if h.period < 1 || h.period > HORIZON {
                    return Err(HarnessError::Config(format!("hyperplane period {}", h.period)));
                }
                Ok(Hyperplane::new(h.kind, generator(&h.generator)?, h.period - 1))
            })
            .collect::<Result<Vec<_>, _>>()?;
        crate::formulation::check_hyperplanes(instance, &hyperplanes)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(Hints {
            enforce,
            warm_starts,
            hyperplanes,
        })
    }
}

/// Parses a hints document against `instance`.
pub fn parse_hints(text: &str, instance: &UCInstance) -> Result<Hints, HarnessError> {
    let doc: HintsDocument = serde_json::from_str(text)?;
    doc.resolve(instance)
}
