//! `dispel` runs paired feature-reduction comparisons, alpha sweeps,
//! noise studies, and separability scans from a TOML experiment config.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error,
//! 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dispel_core::harness::{
    run_alpha_sweep_on, run_comparison_on, run_lpmr_scan, run_noise_study_on, ExperimentConfig,
    ExperimentReport, NoiseSpec,
};
use dispel_core::search::SearchStrategy;
use dispel_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "dispel",
    version,
    about = "Class-dispelling preprocessing benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the paired baseline/shifted comparison and emit a JSON report.
    Compare(CompareArgs),
    /// Evaluate every alpha in a range and emit an alpha,accuracy table.
    Sweep(SweepArgs),
    /// Re-run the comparison on noise-injected copies of the dataset.
    Noise(NoiseArgs),
    /// Scan class separability over an alpha range and flag the
    /// problem-maker values.
    Lpmr(LpmrArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override both the protocol seed and the search seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the lower search bound.
    #[arg(long)]
    alpha_min: Option<i64>,
    /// Override the upper search bound.
    #[arg(long)]
    alpha_max: Option<i64>,
    /// Write the result here instead of stdout.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

impl CommonArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.protocol.seed = seed;
            config.search.seed = seed;
        }
        if let Some(lo) = self.alpha_min {
            config.search.alpha_min = lo;
        }
        if let Some(hi) = self.alpha_max {
            config.search.alpha_max = hi;
        }
        config.validate()?;
        Ok(config)
    }

    fn emit(&self, content: &str) -> Result<()> {
        match &self.output {
            Some(path) => std::fs::write(path, content).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            }),
            None => {
                println!("{content}");
                Ok(())
            }
        }
    }
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the configured search strategy.
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// After the search, refit the projection on the whole dataset at the
    /// selected alpha and write it here in the versioned text format.
    #[arg(long, value_name = "PATH")]
    dump_model: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct NoiseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Noise level as fraction:magnitude[:seed]; repeatable. Defaults to
    /// the config's [noise] section.
    #[arg(long = "level", value_name = "F:M[:SEED]")]
    levels: Vec<String>,
}

#[derive(Args)]
struct LpmrArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Grid,
    HillClimb,
    Sga,
}

impl From<StrategyArg> for SearchStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Grid => SearchStrategy::Grid,
            StrategyArg::HillClimb => SearchStrategy::HillClimb,
            StrategyArg::Sga => SearchStrategy::Sga,
        }
    }
}

fn summarize(report: &ExperimentReport) {
    eprintln!(
        "{} / {} ({} folds x {} repeats): baseline {:.2} +- {:.2}, best alpha {} -> {:.2} +- {:.2}",
        report.metadata.dataset_name,
        report.metadata.reduction_method,
        report.metadata.protocol.folds,
        report.metadata.protocol.repeats,
        report.baseline.mean,
        report.baseline.std_dev,
        report.best_alpha,
        report.dcg.mean,
        report.dcg.std_dev,
    );
}

fn parse_level(text: &str, default_seed: u64) -> Result<NoiseSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(Error::Config(format!(
            "noise level {text:?} must be fraction:magnitude or fraction:magnitude:seed"
        )));
    }
    let parse_f = |s: &str, what: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::Config(format!("bad {what} {s:?}: {e}")))
    };
    let fraction = parse_f(parts[0], "noise fraction")?;
    let magnitude = parse_f(parts[1], "noise magnitude")?;
    let seed = match parts.get(2) {
        Some(s) => s
            .parse::<u64>()
            .map_err(|e| Error::Config(format!("bad noise seed {s:?}: {e}")))?,
        None => default_seed,
    };
    Ok(NoiseSpec {
        fraction,
        magnitude,
        seed,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compare(args) => {
            let mut config = args.common.load()?;
            if let Some(strategy) = args.strategy {
                config.search.strategy = strategy.into();
            }
            let (dataset, log) = config.load_dataset()?;
            let report = run_comparison_on(&dataset, &config, &log)?;
            summarize(&report);
            if let Some(path) = &args.dump_model {
                let shifted = dispel_core::dcg::apply_dcg(
                    dataset.features(),
                    dataset.labels(),
                    report.best_alpha,
                )?;
                let model = config.reduction.fit(&shifted, dataset.labels())?;
                std::fs::write(path, model.to_text()).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
            }
            args.common.emit(&report.to_json()?)
        }
        Command::Sweep(args) => {
            let config = args.common.load()?;
            let (dataset, _) = config.load_dataset()?;
            let table = run_alpha_sweep_on(
                &dataset,
                &config,
                config.search.alpha_min,
                config.search.alpha_max,
            )?;
            args.common.emit(&table.to_csv())
        }
        Command::Noise(args) => {
            let config = args.common.load()?;
            let levels: Vec<NoiseSpec> = if args.levels.is_empty() {
                let spec = config.noise.ok_or_else(|| {
                    Error::Config("no --level given and the config has no [noise] section".into())
                })?;
                vec![spec]
            } else {
                let default_seed = config.noise.map(|n| n.seed).unwrap_or(0);
                args.levels
                    .iter()
                    .map(|t| parse_level(t, default_seed))
                    .collect::<Result<_>>()?
            };
            let (dataset, log) = config.load_dataset()?;
            let study = run_noise_study_on(&dataset, &config, &log, &levels)?;
            for level in &study.levels {
                eprintln!(
                    "fraction {:.3} magnitude {:.3} seed {}: baseline drop {:+.2}, shifted-pipeline drop {:+.2}",
                    level.spec.fraction,
                    level.spec.magnitude,
                    level.spec.seed,
                    level.baseline_drop,
                    level.dcg_drop,
                );
            }
            args.common.emit(&study.to_json()?)
        }
        Command::Lpmr(args) => {
            let config = args.common.load()?;
            let (dataset, _) = config.load_dataset()?;
            let table = run_lpmr_scan(&dataset, config.search.alpha_min, config.search.alpha_max)?;
            eprintln!(
                "baseline separability {:.6}; problem-maker alphas: {:?}",
                table.baseline,
                table.lpmr()
            );
            args.common.emit(&table.to_csv())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code())
        }
    }
}
