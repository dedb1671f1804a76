use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use stein_verify::config::{load_config, Experiment};
use stein_verify::report::{emit, Format};
use stein_verify::runner::run;

const VERSION_TEXT: &str = concat!(env!("CARGO_PKG_VERSION"), " (record schema 1)");

#[derive(Parser)]
#[command(name = "stein-verify", version = VERSION_TEXT, about = "Monte Carlo verification of Stein's-method normal approximation bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
    /// Worker threads; overrides the config. Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Randomized checks of the field f(A, eps).
    Lemmas(Common),
    /// Gaussian mass of shells around convex sets.
    GaussianConcentration(Common),
    /// Shell probabilities for leave-one-out sums.
    SumConcentration(Common),
    /// Discrepancy between W and Z over families of convex sets.
    BerryEsseen(Common),
    /// Adversarial search over half-spaces.
    Adversarial(Common),
    /// Residual of the numerical Stein solution.
    SteinResidual(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
    Svg,
}

impl Command {
    fn split(self) -> (Experiment, Common) {
        match self {
            Self::Lemmas(c) => (Experiment::Lemmas, c),
            Self::GaussianConcentration(c) => (Experiment::GaussianConcentration, c),
            Self::SumConcentration(c) => (Experiment::SumConcentration, c),
            Self::BerryEsseen(c) => (Experiment::BerryEsseen, c),
            Self::Adversarial(c) => (Experiment::Adversarial, c),
            Self::SteinResidual(c) => (Experiment::SteinResidual, c),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (experiment, args) = cli.command.split();
    let outcome = (|| {
        let mut cfg = load_config(&args.config)?;
        if cfg.experiment != experiment {
            return Err(stein_verify::Error::Validation {
                field: "experiment".into(),
                message: format!(
                    "config is for `{}` but the subcommand is `{}`",
                    cfg.experiment.as_str(),
                    experiment.as_str()
                ),
            });
        }
        if let Some(w) = args.workers {
            cfg.workers = w;
        }
        let record = run(&cfg)?;
        let format = match args.format {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
            OutFormat::Svg => Format::Svg,
        };
        emit(&record, format, args.out.as_deref())?;
        Ok(record.any_fail())
    })();
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
