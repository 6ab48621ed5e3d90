use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use momentmap::continuation::ContinuationMode;
use momentmap::critical::DEFAULT_SCAN_SAMPLES;
use momentmap_cli::{run, CliError, Command, RunOptions, ScenarioConfig};

#[derive(Debug, Parser)]
#[command(
    name = "momentmap",
    version,
    about = "Moment-map analysis of matrix spectral estimation"
)]
struct Cli {
    /// Scenario config (JSON). Defaults to the bundled two-channel example.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the quadrature step of the config.
    #[arg(long, global = true)]
    delta_theta: Option<f64>,
    /// Pairwise summation on the thread pool instead of sequential order.
    #[arg(long, global = true)]
    parallel: bool,
    /// Use the fine grid, Δθ = 1e-4 (slow).
    #[arg(long, global = true, conflicts_with = "delta_theta")]
    full_grid: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    PredictorCorrector,
    Ode,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Determinantal roots of zKG and every zCG.
    Roots,
    /// det J_h along the path between the first two factors.
    DetScan {
        #[arg(long, default_value_t = DEFAULT_SCAN_SAMPLES)]
        samples: usize,
    },
    /// Bisection to the critical point on the path.
    Bisect {
        #[arg(long, default_value_t = DEFAULT_SCAN_SAMPLES)]
        samples: usize,
        /// Explicit bracket `LO,HI`; otherwise the first bracket of a scan.
        #[arg(long, value_parser = parse_bracket)]
        bracket: Option<(f64, f64)>,
    },
    /// Lyapunov-Schmidt reduction and classification at the critical point.
    Bifurcate {
        #[arg(long, default_value_t = DEFAULT_SCAN_SAMPLES)]
        samples: usize,
    },
    /// Solve h(Λ) = h(Λ_end) by continuation from Λ_start.
    Continue {
        #[arg(long, value_enum, default_value_t = Mode::PredictorCorrector)]
        mode: Mode,
    },
    /// τ(C) for every factor with a finite-difference Jacobian.
    Tau {
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
    },
    /// Full pipeline with checks against the known values of the example.
    Reproduce,
}

fn parse_bracket(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

fn main() -> ExitCode {
    // usage errors share the invalid-config exit code; 2 means infeasible
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let command = match cli.command {
        Sub::Roots => Command::Roots,
        Sub::DetScan { samples } => Command::DetScan { samples },
        Sub::Bisect { samples, bracket } => Command::Bisect { samples, bracket },
        Sub::Bifurcate { samples } => Command::Bifurcate { samples },
        Sub::Continue { mode } => Command::Continue {
            mode: match mode {
                Mode::PredictorCorrector => ContinuationMode::PredictorCorrector,
                Mode::Ode => ContinuationMode::Ode,
            },
        },
        Sub::Tau { eps } => Command::Tau { eps },
        Sub::Reproduce => Command::Reproduce,
    };
    let config = match &cli.config {
        Some(path) => ScenarioConfig::load(path),
        None => Ok(ScenarioConfig::bundled()),
    };
    let options = RunOptions {
        out: cli.out,
        delta_theta: cli.delta_theta,
        full_grid: cli.full_grid,
        parallel: cli.parallel,
    };
    match config.and_then(|c| run(command, c, &options)) {
        Ok(_) => {
            eprintln!("{}: reports written to {}", command.name(), options.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => report_error(command, &e),
    }
}

fn report_error(command: Command, e: &CliError) -> ExitCode {
    eprintln!("{}: {e}", command.name());
    ExitCode::from(e.exit_code())
}
