use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{load_config, run_energy_report_on, run_in, output_dir, Command, Status};
use crate::analysis::{existence_time, gronwall_threshold, GronwallParams, DEFAULT_GAMMA, DEFAULT_M};

#[derive(Debug, Parser)]
#[command(name = "flamefront", version, about = "Flame-front and Kuramoto–Sivashinsky experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Exact output directory (default: <output.dir>/<command>-<config hash>).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Integrate the configured model and write diagnostics and snapshots.
    Simulate(RunArgs),
    /// Compare the rescaled graph model with KS over a range of ε.
    SweepEpsilon(RunArgs),
    /// Convergence of the mollified model as δ decreases.
    SweepDelta(RunArgs),
    /// Measured linear growth rates of rescaled KS against k² - 4k⁴.
    Dispersion(RunArgs),
    /// Norms and energy of the initial condition or of a snapshot file.
    EnergyReport {
        #[command(flatten)]
        run: RunArgs,
        /// Snapshot file to report on instead of the initial condition.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Closed-form bounds.
    LemmaEval {
        #[command(subcommand)]
        which: Lemma,
    },
}

#[derive(Debug, Subcommand)]
enum Lemma {
    /// ln(1 + γ/‖y₀‖^(m-2)) / γ
    ExistenceTime {
        #[arg(long)]
        h4_norm: f64,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long, default_value_t = DEFAULT_M)]
        m: f64,
    },
    /// τ₀ and E* of the threshold lemma.
    GronwallThreshold {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        m: f64,
        #[arg(long)]
        gamma_star: f64,
        #[arg(long)]
        t_star: f64,
        #[arg(long)]
        e0: f64,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                Status::ConfigError.code()
            } else {
                Status::Success.code()
            };
        }
    };
    let (cmd, args, field) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a, None),
        Cmd::SweepEpsilon(a) => (Command::SweepEpsilon, a, None),
        Cmd::SweepDelta(a) => (Command::SweepDelta, a, None),
        Cmd::Dispersion(a) => (Command::Dispersion, a, None),
        Cmd::EnergyReport { run, field } => (Command::EnergyReport, run, field),
        Cmd::LemmaEval { which } => return lemma(which),
    };
    let cfg = match load_config(&args.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return Status::ConfigError.code();
        }
    };
    let dir = args.out.unwrap_or_else(|| output_dir(&cfg, cmd));
    let result = match field {
        Some(f) => run_energy_report_on(&cfg, &f, &dir),
        None => run_in(cmd, &cfg, &dir),
    };
    match result {
        Ok(report) => {
            for line in &report.summary {
                println!("{line}");
            }
            println!("output: {}", report.dir.display());
            report.status.code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.status().code()
        }
    }
}

fn lemma(which: Lemma) -> i32 {
    let result = match which {
        Lemma::ExistenceTime { h4_norm, gamma, m } => {
            existence_time(h4_norm, gamma, m).map(|t| println!("{t}"))
        }
        Lemma::GronwallThreshold {
            alpha,
            beta,
            epsilon,
            n,
            m,
            gamma_star,
            t_star,
            e0,
        } => gronwall_threshold(&GronwallParams {
            alpha,
            beta,
            epsilon,
            n,
            m,
            gamma_star,
            t_star,
            e0,
        })
        .map(|th| {
            println!("tau0 = {}", th.tau0);
            println!("e_star = {}", th.e_star);
        }),
    };
    match result {
        Ok(()) => Status::Success.code(),
        Err(e) => {
            eprintln!("error: {e}");
            Status::ConfigError.code()
        }
    }
}
