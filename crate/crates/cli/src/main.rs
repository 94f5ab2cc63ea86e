use std::path::PathBuf;
use std::process::ExitCode;

use apnc_cli::commands::{AnalyticOptions, DmtOptions, RunOptions};
use apnc_cli::{cmd_analytic, cmd_compare, cmd_dmt, cmd_sweep, CliError, ExperimentConfig};
use apnc_core::{FitOptions, RatePartition};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "apnc", version, about = "Outage sweeps and DMT analysis for active physical-layer network coding")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured base seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, value_name = "K")]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate outage probability over the configured SNR grid.
    Sweep,
    /// Fit diversity orders to sweep CSVs and compare with analytic lines.
    Dmt(DmtArgs),
    /// Write analytic DMT curves (CSV, SVG, gnuplot).
    Analytic(AnalyticArgs),
    /// Sweep active PNC and all baselines, then fit and plot them together.
    Compare,
}

#[derive(Args)]
struct DmtArgs {
    /// Sweep CSVs produced by `apnc sweep`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Multiplexing gain per input, comma separated.
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
    /// Allowed |d_hat - expected|.
    #[arg(long, default_value_t = apnc_cli::commands::DEFAULT_TOLERANCE)]
    tol: f64,
    /// Weight points by inverse variance of log10 p_hat.
    #[arg(long)]
    weighted: bool,
    /// Keep cells where no failure was observed.
    #[arg(long)]
    keep_no_failure: bool,
    /// Ignore points below this SNR (dB).
    #[arg(long)]
    min_db: Option<f64>,
}

#[derive(Args)]
struct AnalyticArgs {
    #[arg(long)]
    relays: Option<usize>,
    #[arg(long = "rate")]
    rate: Option<f64>,
    #[arg(long)]
    rt1: Option<f64>,
    #[arg(long)]
    rt2: Option<f64>,
    /// Also draw active PNC for Rt1 = Rt2 in {0, 0.25, 0.5, 0.75, 1} x R.
    #[arg(long)]
    family: bool,
}

fn need_config(g: &Global) -> Result<&PathBuf, CliError> {
    g.config.as_ref().ok_or_else(|| CliError::Invalid("--config PATH is required for this command".into()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let opts = RunOptions { seed: g.seed, out: g.out.clone(), workers: g.workers.unwrap_or(0) };
    match cli.command {
        Command::Sweep => {
            for s in cmd_sweep(need_config(g)?, &opts)? {
                println!("{}: {} points -> {}", s.strategy, s.rows.len(), s.csv.display());
            }
        }
        Command::Dmt(a) => {
            let mut d = DmtOptions::new(a.inputs, g.out.clone().unwrap_or_else(|| PathBuf::from(".")));
            d.r_values = a.r;
            d.tolerance = a.tol;
            d.fit = FitOptions { exclude_no_failure: !a.keep_no_failure, weighted: a.weighted, min_rho_db: a.min_db };
            for row in cmd_dmt(&d)? {
                let expected = row.expected_d.map_or("-".to_string(), |e| format!("{e:.3}"));
                println!("{} r={} d_hat={:.3} expected={} R^2={:.4}", row.strategy, row.r, row.d_hat, expected, row.goodness);
            }
        }
        Command::Analytic(a) => {
            let mut base = match &g.config {
                Some(path) => AnalyticOptions::from_config(&ExperimentConfig::load(path)?, &opts, a.family),
                None => {
                    let relays = a.relays.ok_or_else(|| CliError::Invalid("--relays or --config is required".into()))?;
                    let rate = a.rate.ok_or_else(|| CliError::Invalid("--rate or --config is required".into()))?;
                    AnalyticOptions {
                        relays,
                        rates: RatePartition::new(rate, 0.0, 0.0)?,
                        family: a.family,
                        out: g.out.clone().unwrap_or_else(|| PathBuf::from(".")),
                    }
                }
            };
            if let Some(n) = a.relays {
                base.relays = n;
            }
            let rate = a.rate.unwrap_or(base.rates.rate());
            base.rates = RatePartition::new(
                rate,
                a.rt1.unwrap_or(base.rates.rt1()),
                a.rt2.unwrap_or(base.rates.rt2()),
            )?;
            if base.relays == 0 {
                return Err(CliError::Invalid("--relays must be >= 1".into()));
            }
            let curves = cmd_analytic(&base)?;
            println!("{} curves -> {}", curves.len(), base.out.join("analytic.csv").display());
        }
        Command::Compare => {
            let out = cmd_compare(need_config(g)?, &opts)?;
            for row in out.dmt {
                let expected = row.expected_d.map_or("-".to_string(), |e| format!("{e:.3}"));
                println!("{} d_hat={:.3} expected={}", row.strategy, row.d_hat, expected);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("apnc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
