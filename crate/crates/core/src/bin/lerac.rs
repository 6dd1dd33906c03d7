use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lerac::experiment::{self, ExperimentConfig, Regime};
use lerac::network::Architecture;
use lerac::schedulers::hyperparameter_rows;
use lerac::{Error, Result};

#[derive(Parser)]
#[command(
    name = "lerac",
    version,
    about = "Train and compare learning-rate curriculum regimes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration for the configured number of repeats.
    Train(RunArgs),
    /// Train several regimes on the same data and seeds and tabulate accuracy.
    Compare(RunArgs),
    /// Serial, interleaved training of several regimes for wall-clock comparison.
    Timing(RunArgs),
    /// List the available presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; its sections are layered over the selected preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset used when no config file is given.
    #[arg(long, default_value = "mlp-spirals")]
    preset: String,
    /// Regime name; `compare` and `timing` accept a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    regime: Vec<Regime>,
    /// Base seed; repeat `i` uses `seed + i`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Output directory for run artifacts and tables.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Serial repeats and reproducible metrics files (wall-clock seconds go
    /// to a separate `walltime.csv`).
    #[arg(long)]
    deterministic: bool,
}

impl RunArgs {
    fn base_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => experiment::preset(&self.preset)?,
        };
        let run = &mut cfg.experiment;
        if let Some(seed) = self.seed {
            run.base_seed = seed;
        }
        if let Some(repeats) = self.repeats {
            run.repeats = repeats;
        }
        if let Some(epochs) = self.epochs {
            run.epochs = epochs;
        }
        run.output_dir = Some(self.out.clone());
        run.deterministic |= self.deterministic;
        cfg.validate()?;
        Ok(cfg)
    }

    /// One config per requested regime. Without `--regime`, every regime the
    /// architecture supports.
    fn regime_configs(&self) -> Result<Vec<ExperimentConfig>> {
        let base = self.base_config()?;
        let regimes: Vec<Regime> = if self.regime.is_empty() {
            Regime::ALL
                .into_iter()
                .filter(|r| !r.uses_smoothing() || base.experiment.architecture == Architecture::Cnn)
                .collect()
        } else {
            self.regime.clone()
        };
        regimes
            .into_iter()
            .map(|r| {
                let cfg = base.with_regime(r);
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn train(args: &RunArgs) -> Result<()> {
    let mut cfg = args.base_config()?;
    match args.regime.as_slice() {
        [] => {}
        [r] => cfg = cfg.with_regime(*r),
        _ => return Err(Error::Config("train takes a single --regime".into())),
    }
    create_out(&args.out)?;
    let result = experiment::run_experiment(&cfg)?;
    for rep in &result.repeats {
        let acc = rep.final_test_acc.map_or("-".to_string(), |a| format!("{a:.2}"));
        println!(
            "repeat {} seed {} {} epochs {} test accuracy {acc}",
            rep.repeat,
            rep.seed,
            rep.status.name(),
            rep.epochs.len()
        );
    }
    println!("{}: {:.2} ± {:.2}", result.label, result.mean, result.std);
    Ok(())
}

fn compare(args: &RunArgs) -> Result<()> {
    let cfgs = args.regime_configs()?;
    create_out(&args.out)?;
    let (table, _) = experiment::compare_regimes(&cfgs)?;
    let text = table.to_text();
    print!("{text}");
    write_text(&args.out.join("comparison.txt"), &text)?;
    table.write_csv(args.out.join("comparison.csv"))
}

fn timing(args: &RunArgs) -> Result<()> {
    let mut cfgs = args.regime_configs()?;
    for cfg in &mut cfgs {
        cfg.experiment.serial = true;
    }
    create_out(&args.out)?;
    let (report, _) = experiment::run_timing(&cfgs)?;
    let text = report.to_text();
    print!("{text}");
    write_text(&args.out.join("timing.txt"), &text)?;
    write_text(&args.out.join("timing.csv"), &report.summary_csv())?;
    write_text(&args.out.join("timing_series.csv"), &report.series_csv())
}

fn presets() {
    println!("desk presets:");
    for name in experiment::presets::DESK_PRESETS {
        println!("  {name}");
    }
    println!("published hyperparameter rows:");
    for row in hyperparameter_rows() {
        println!(
            "  {:<18} {:<20} eta {:e}  eta_first {:e}  eta_last {:e}  k {}..{}  cbs sigma {} decay {} every {}..{}",
            row.name,
            row.architecture,
            row.eta_base,
            row.eta_first,
            row.eta_last,
            row.k.start(),
            row.k.end(),
            row.cbs_sigma,
            row.cbs_decay,
            row.cbs_step.start(),
            row.cbs_step.end()
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Train(args) => train(args),
        Command::Compare(args) => compare(args),
        Command::Timing(args) => timing(args),
        Command::Presets => {
            presets();
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
