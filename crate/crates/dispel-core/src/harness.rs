//! Experiment orchestration: paired baseline/shifted comparisons, alpha
//! sweeps, noise studies, and machine-readable reports.
//!
//! A comparison evaluates one fitness function, the cross-validated
//! pipeline accuracy as a function of the loop count, under a configured
//! search strategy, then reports the baseline (`alpha = 0`) and best-alpha
//! statistics side by side. Both pipelines consume identical fold
//! partitions; the partition fingerprint in the report metadata pins that.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classify::{
    evaluate_pipeline, AccuracyStat, KnnConfig, KnnSpec, PipelineEval, Protocol,
};
use crate::dataset::{
    k_fold_indices, load_csv_with, ColumnRef, Dataset, LoadLog, LoadOptions, MissingPolicy,
};
use crate::dcg::{AlphaOrigin, DcgParams};
use crate::error::{Error, Result};
use crate::mix_seed;
use crate::reduction::{AutoTag, ReductionConfig};
use crate::search::{
    grid_search, hill_climb, sga_search, AlphaSearchTrace, SearchStrategy, SgaConfig,
};

/// Supported configuration schema version.
pub const CONFIG_VERSION: u32 = 1;
/// Report schema version emitted by this build.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Dataset ingestion section of an experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub name: Option<String>,
    /// 1-based column index, or a header name.
    pub label_column: ColumnRef,
    #[serde(default)]
    pub has_header: bool,
    #[serde(default)]
    pub drop_columns: Vec<ColumnRef>,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
    /// Z-score features after loading. Off by default: the shift operates
    /// on raw feature geometry.
    #[serde(default)]
    pub standardize: bool,
}

/// `k = "auto"` or a fixed odd integer in the `[knn]` section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KnnK {
    Fixed(usize),
    Auto(AutoTag),
}

impl Default for KnnK {
    fn default() -> Self {
        KnnK::Auto(AutoTag::Auto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KnnSection {
    #[serde(default)]
    pub k: KnnK,
}

impl KnnSection {
    pub fn to_spec(self) -> Result<KnnSpec> {
        match self.k {
            KnnK::Fixed(k) => Ok(KnnSpec::Fixed(KnnConfig::new(k)?)),
            KnnK::Auto(_) => Ok(KnnSpec::Auto),
        }
    }
}

/// Search strategy section. Strategy-specific fields have defaults, so a
/// config names only what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub strategy: SearchStrategy,
    #[serde(default = "default_alpha_min")]
    pub alpha_min: i64,
    #[serde(default = "default_alpha_max")]
    pub alpha_max: i64,
    #[serde(default)]
    pub seed: u64,
    // hill climbing
    #[serde(default)]
    pub start_alpha: i64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    // genetic algorithm
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_generations")]
    pub generations: usize,
    #[serde(default = "default_mutation_rate")]
    pub mutation_rate: f64,
    #[serde(default = "default_crossover_rate")]
    pub crossover_rate: f64,
}

fn default_alpha_min() -> i64 {
    -10
}
fn default_alpha_max() -> i64 {
    80
}
fn default_max_steps() -> usize {
    200
}
fn default_restarts() -> usize {
    5
}
fn default_population() -> usize {
    20
}
fn default_generations() -> usize {
    30
}
fn default_mutation_rate() -> f64 {
    0.15
}
fn default_crossover_rate() -> f64 {
    0.9
}

impl SearchConfig {
    pub fn grid(alpha_min: i64, alpha_max: i64, seed: u64) -> Self {
        SearchConfig {
            strategy: SearchStrategy::Grid,
            alpha_min,
            alpha_max,
            seed,
            start_alpha: 0,
            max_steps: default_max_steps(),
            restarts: default_restarts(),
            population: default_population(),
            generations: default_generations(),
            mutation_rate: default_mutation_rate(),
            crossover_rate: default_crossover_rate(),
        }
    }

    fn run<F>(&self, fitness: F) -> Result<AlphaSearchTrace>
    where
        F: FnMut(i64) -> Result<f64>,
    {
        match self.strategy {
            SearchStrategy::Grid => grid_search(fitness, self.alpha_min, self.alpha_max),
            SearchStrategy::HillClimb => hill_climb(
                fitness,
                self.start_alpha,
                self.max_steps,
                self.restarts,
                self.alpha_min,
                self.alpha_max,
                self.seed,
            ),
            SearchStrategy::Sga => sga_search(
                fitness,
                &SgaConfig {
                    population: self.population,
                    generations: self.generations,
                    mutation_rate: self.mutation_rate,
                    crossover_rate: self.crossover_rate,
                    alpha_min: self.alpha_min,
                    alpha_max: self.alpha_max,
                    seed: self.seed,
                },
            ),
        }
    }
}

/// Optional noise injection parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Fraction of feature cells perturbed, in [0, 1].
    pub fraction: f64,
    /// Noise standard deviation as a multiple of each feature's column std.
    pub magnitude: f64,
    #[serde(default)]
    pub seed: u64,
}

/// A full experiment: dataset, pipeline, protocol, and search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub config_version: u32,
    pub dataset: DatasetConfig,
    pub reduction: ReductionConfig,
    #[serde(default)]
    pub knn: KnnSection,
    pub protocol: Protocol,
    pub search: SearchConfig,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
}

impl ExperimentConfig {
    /// Parse a TOML config file; the dataset path resolves relative to the
    /// config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut config = Self::from_toml_str(&text)?;
        if config.dataset.path.is_relative() {
            if let Some(dir) = path.parent() {
                config.dataset.path = dir.join(&config.dataset.path);
            }
        }
        Ok(config)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("cannot parse config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.config_version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config_version {} unsupported; this build reads version {CONFIG_VERSION}",
                self.config_version
            )));
        }
        Protocol::new(
            self.protocol.folds,
            self.protocol.repeats,
            self.protocol.seed,
        )?;
        self.knn.to_spec()?;
        if self.search.alpha_min > self.search.alpha_max {
            return Err(Error::Range(format!(
                "alpha_min {} exceeds alpha_max {}",
                self.search.alpha_min, self.search.alpha_max
            )));
        }
        if self.reduction.ridge_lambda.is_nan() || self.reduction.ridge_lambda <= 0.0 {
            return Err(Error::Config(format!(
                "ridge_lambda must be positive, got {}",
                self.reduction.ridge_lambda
            )));
        }
        if let Some(noise) = &self.noise {
            if !(0.0..=1.0).contains(&noise.fraction) {
                return Err(Error::Config(format!(
                    "noise fraction must be in [0, 1], got {}",
                    noise.fraction
                )));
            }
            if noise.magnitude < 0.0 {
                return Err(Error::Config(format!(
                    "noise magnitude must be nonnegative, got {}",
                    noise.magnitude
                )));
            }
        }
        Ok(())
    }

    /// Load, log, and optionally standardize the configured dataset.
    pub fn load_dataset(&self) -> Result<(Dataset, LoadLog)> {
        let mut opts = LoadOptions::new(self.dataset.label_column.clone());
        opts.missing_policy = self.dataset.missing_policy;
        opts.has_header = self.dataset.has_header;
        opts.drop_columns = self.dataset.drop_columns.clone();
        opts.name = self.dataset.name.clone();
        let (mut d, log) =
            load_csv_with(&self.dataset.path, &opts).map_err(|e| e.at_stage("load dataset"))?;
        if self.dataset.standardize {
            d.standardize();
        }
        Ok((d, log))
    }
}

/// Everything a report records besides the accuracy numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub dataset_name: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub rows_dropped: usize,
    pub standardized: bool,
    pub reduction_method: String,
    /// Modal projection dimension across the best-alpha fold evaluations.
    pub out_dim_used: usize,
    /// Modal neighborhood size across the best-alpha fold evaluations.
    pub k_used: usize,
    pub protocol: Protocol,
    pub search_strategy: String,
    pub alpha_min: i64,
    pub alpha_max: i64,
    pub search_seed: u64,
    /// FNV-1a hash of every fold partition both pipelines consumed.
    pub partition_fingerprint: String,
    pub tool_version: String,
    pub unix_timestamp: u64,
    pub notes: Vec<String>,
}

/// Paired baseline / best-alpha comparison, shaped like one benchmark row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub metadata: ReportMetadata,
    /// The exact configuration that produced this report.
    pub config: ExperimentConfig,
    /// Accuracy at `alpha = 0` under the report's protocol.
    pub baseline: AccuracyStat,
    /// Accuracy at `best_alpha` under the same protocol and partitions.
    pub dcg: AccuracyStat,
    pub best_alpha: i64,
    /// The selected loop count with the provenance of how it was chosen.
    pub dcg_params: DcgParams,
    pub trace: AlphaSearchTrace,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot serialize report: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("cannot parse report: {e}")))
    }
}

/// FNV-1a fingerprint of all fold partitions the protocol will generate.
pub fn partition_fingerprint(d: &Dataset, protocol: &Protocol) -> Result<u64> {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |v: u64| {
        for byte in v.to_le_bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for rep in 0..protocol.repeats {
        let fold_seed = mix_seed(protocol.seed, rep as u64);
        let folds = k_fold_indices(d, protocol.folds, fold_seed)?;
        feed(rep as u64);
        for (fi, fold) in folds.iter().enumerate() {
            feed(fi as u64);
            for &idx in fold {
                feed(idx as u64);
            }
        }
    }
    Ok(hash)
}

/// Run the paired comparison described by `config` on its dataset.
pub fn run_comparison(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let (dataset, log) = config.load_dataset()?;
    run_comparison_on(&dataset, config, &log)
}

/// [`run_comparison`] against an already-loaded dataset.
pub fn run_comparison_on(
    d: &Dataset,
    config: &ExperimentConfig,
    log: &LoadLog,
) -> Result<ExperimentReport> {
    config.validate()?;
    let knn = config.knn.to_spec()?;
    let reduction = config.reduction.clone();
    let protocol = config.protocol;

    let mut evals: BTreeMap<i64, PipelineEval> = BTreeMap::new();
    let trace = {
        let fitness = |alpha: i64| -> Result<f64> {
            let eval = evaluate_pipeline(d, alpha, &reduction, &knn, &protocol)
                .map_err(|e| e.at_stage("pipeline evaluation"))?;
            let mean = eval.stat.mean;
            evals.insert(alpha, eval);
            Ok(mean)
        };
        config
            .search
            .run(fitness)
            .map_err(|e| e.at_stage("alpha search"))?
    };

    let baseline_eval = evals
        .get(&0)
        .expect("every strategy evaluates alpha = 0")
        .clone();
    let best_eval = evals
        .get(&trace.best_alpha)
        .expect("best alpha comes from the evaluated set")
        .clone();
    debug_assert!(best_eval.stat.mean >= baseline_eval.stat.mean);

    let fingerprint = partition_fingerprint(d, &protocol).map_err(|e| e.at_stage("folding"))?;
    let mut notes = Vec::new();
    if log.rows_dropped > 0 {
        notes.push(format!(
            "dropped {} of {} rows with missing or unparseable cells",
            log.rows_dropped, log.rows_read
        ));
    }
    if config.dataset.standardize {
        notes.push("features standardized to zero mean and unit variance".into());
    }

    let metadata = ReportMetadata {
        dataset_name: d.name().to_owned(),
        n_samples: d.n_samples(),
        n_features: d.n_features(),
        n_classes: d.n_classes(),
        rows_dropped: log.rows_dropped,
        standardized: config.dataset.standardize,
        reduction_method: config.reduction.method.to_string(),
        out_dim_used: PipelineEval::modal(&best_eval.out_dims),
        k_used: PipelineEval::modal(&best_eval.k_used),
        protocol,
        search_strategy: config.search.strategy.to_string(),
        alpha_min: config.search.alpha_min,
        alpha_max: config.search.alpha_max,
        search_seed: config.search.seed,
        partition_fingerprint: format!("{fingerprint:016x}"),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        unix_timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        notes,
    };

    let origin = match config.search.strategy {
        SearchStrategy::Grid => AlphaOrigin::Grid,
        SearchStrategy::HillClimb => AlphaOrigin::HillClimb,
        SearchStrategy::Sga => AlphaOrigin::Sga,
    };
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        metadata,
        config: config.clone(),
        baseline: baseline_eval.stat,
        dcg: best_eval.stat,
        best_alpha: trace.best_alpha,
        dcg_params: DcgParams {
            alpha: trace.best_alpha,
            origin,
        },
        trace,
    })
}

/// One accuracy row per integer alpha in the inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub dataset_name: String,
    pub rows: Vec<(i64, f64)>,
}

impl SweepTable {
    /// Two-column comma-separated text with an `alpha,accuracy_percent`
    /// header. Accuracies print in shortest-roundtrip form, so the bytes
    /// are stable for a fixed seed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,accuracy_percent\n");
        for (a, f) in &self.rows {
            out.push_str(&format!("{a},{f:?}\n"));
        }
        out
    }
}

/// Evaluate the configured pipeline at every alpha in `[alpha_min, alpha_max]`.
pub fn run_alpha_sweep(
    config: &ExperimentConfig,
    alpha_min: i64,
    alpha_max: i64,
) -> Result<SweepTable> {
    config.validate()?;
    let (dataset, _) = config.load_dataset()?;
    run_alpha_sweep_on(&dataset, config, alpha_min, alpha_max)
}

/// [`run_alpha_sweep`] against an already-loaded dataset.
pub fn run_alpha_sweep_on(
    d: &Dataset,
    config: &ExperimentConfig,
    alpha_min: i64,
    alpha_max: i64,
) -> Result<SweepTable> {
    let knn = config.knn.to_spec()?;
    let reduction = config.reduction.clone();
    let protocol = config.protocol;
    let fitness = |alpha: i64| -> Result<f64> {
        Ok(evaluate_pipeline(d, alpha, &reduction, &knn, &protocol)
            .map_err(|e| e.at_stage("pipeline evaluation"))?
            .stat
            .mean)
    };
    let trace = grid_search(fitness, alpha_min, alpha_max)?;
    let rows: Vec<(i64, f64)> = trace
        .evaluations
        .iter()
        .copied()
        .filter(|&(a, _)| a >= alpha_min && a <= alpha_max)
        .collect();
    Ok(SweepTable {
        dataset_name: d.name().to_owned(),
        rows,
    })
}

/// Perturb a seeded uniform sample of feature cells with Gaussian noise
/// scaled per feature: exactly `floor(fraction * cells)` cells change,
/// labels never do.
pub fn inject_noise(d: &Dataset, fraction: f64, magnitude: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!(
            "noise fraction must be in [0, 1], got {fraction}"
        )));
    }
    if magnitude < 0.0 {
        return Err(Error::Config(format!(
            "noise magnitude must be nonnegative, got {magnitude}"
        )));
    }
    let n = d.n_samples();
    let m = d.n_features();
    let total = n * m;
    let count = (fraction * total as f64).floor() as usize;
    let mut features = d.features().clone();
    if count > 0 && magnitude > 0.0 {
        let col_stds = d.features().col_stds();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Partial Fisher-Yates: the first `count` entries are a uniform
        // sample of cells without replacement.
        let mut cells: Vec<usize> = (0..total).collect();
        for i in 0..count {
            let j = rng.random_range(i..total);
            cells.swap(i, j);
        }
        let mut chosen = cells[..count].to_vec();
        chosen.sort_unstable();
        for cell in chosen {
            let (row, col) = (cell / m, cell % m);
            let sigma = magnitude * col_stds[col];
            if sigma > 0.0 {
                let normal = Normal::new(0.0, sigma)
                    .map_err(|e| Error::Numerical(format!("noise distribution: {e}")))?;
                features[(row, col)] += normal.sample(&mut rng);
            }
        }
    }
    let noisy = d.with_features(features)?;
    debug_assert_eq!(noisy.labels(), d.labels());
    Ok(noisy)
}

/// One noise level's paired outcome relative to the clean run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevelReport {
    pub spec: NoiseSpec,
    pub report: ExperimentReport,
    /// Clean baseline mean minus noisy baseline mean.
    pub baseline_drop: f64,
    /// Clean best-alpha mean minus noisy best-alpha mean.
    pub dcg_drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseStudyReport {
    pub schema_version: u32,
    pub clean: ExperimentReport,
    pub levels: Vec<NoiseLevelReport>,
}

impl NoiseStudyReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot serialize noise study: {e}")))
    }
}

/// Run the comparison clean, then once per noise level on the perturbed
/// dataset, reporting accuracy drops for both pipelines at each level.
pub fn run_noise_study(
    config: &ExperimentConfig,
    levels: &[NoiseSpec],
) -> Result<NoiseStudyReport> {
    config.validate()?;
    let (dataset, log) = config.load_dataset()?;
    run_noise_study_on(&dataset, config, &log, levels)
}

/// [`run_noise_study`] against an already-loaded dataset.
pub fn run_noise_study_on(
    d: &Dataset,
    config: &ExperimentConfig,
    log: &LoadLog,
    levels: &[NoiseSpec],
) -> Result<NoiseStudyReport> {
    let clean = run_comparison_on(d, config, log)?;
    let mut out = Vec::with_capacity(levels.len());
    for spec in levels {
        let noisy = inject_noise(d, spec.fraction, spec.magnitude, spec.seed)
            .map_err(|e| e.at_stage("noise injection"))?;
        let report = run_comparison_on(&noisy, config, log)?;
        out.push(NoiseLevelReport {
            spec: *spec,
            baseline_drop: clean.baseline.mean - report.baseline.mean,
            dcg_drop: clean.dcg.mean - report.dcg.mean,
            report,
        });
    }
    Ok(NoiseStudyReport {
        schema_version: REPORT_SCHEMA_VERSION,
        clean,
        levels: out,
    })
}

/// Separability table exported by the `lpmr` subcommand: per alpha, the
/// minimum class-mean distance and whether it falls below the baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct LpmrTable {
    pub baseline: f64,
    pub rows: Vec<(i64, f64, bool)>,
}

impl LpmrTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,min_pair_distance,below_baseline\n");
        for (a, dist, below) in &self.rows {
            out.push_str(&format!("{a},{dist:?},{below}\n"));
        }
        out
    }

    /// The problem-maker set: alphas whose separability fell below baseline.
    pub fn lpmr(&self) -> Vec<i64> {
        self.rows
            .iter()
            .filter(|(_, _, below)| *below)
            .map(|&(a, _, _)| a)
            .collect()
    }
}

/// Scan separability over an alpha range for export.
pub fn run_lpmr_scan(d: &Dataset, alpha_min: i64, alpha_max: i64) -> Result<LpmrTable> {
    if alpha_min > alpha_max {
        return Err(Error::Range(format!(
            "alpha_min {alpha_min} exceeds alpha_max {alpha_max}"
        )));
    }
    let baseline = crate::dcg::separability(d.features(), d.labels())?.min_pair_distance;
    let mut rows = Vec::new();
    for alpha in alpha_min..=alpha_max {
        let shifted = crate::dcg::apply_dcg(d.features(), d.labels(), alpha)?;
        let dist = crate::dcg::separability(&shifted, d.labels())?.min_pair_distance;
        rows.push((alpha, dist, dist < baseline));
    }
    Ok(LpmrTable { baseline, rows })
}

/// Convenience for tests and tools: an in-memory config that skips file
/// loading and carries a placeholder dataset path.
pub fn config_for(
    reduction: ReductionConfig,
    knn: KnnK,
    protocol: Protocol,
    search: SearchConfig,
) -> ExperimentConfig {
    ExperimentConfig {
        config_version: CONFIG_VERSION,
        dataset: DatasetConfig {
            path: PathBuf::from("unused"),
            name: None,
            label_column: ColumnRef::Index(1),
            has_header: false,
            drop_columns: Vec::new(),
            missing_policy: MissingPolicy::DropRow,
            standardize: false,
        },
        reduction,
        knn: KnnSection { k: knn },
        protocol,
        search,
        noise: None,
    }
}
