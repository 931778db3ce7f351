use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use goggrow::FitWindow;
use goggrow_cli::{
    cmd_check, cmd_fit, cmd_run, cmd_sweep, cmd_wave, parse_model, read_config, read_trace,
    CliError,
};

/// Front laboratory for the go-or-grow aerotaxis models.
#[derive(Parser)]
#[command(name = "goggrow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out_dir` of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the same configuration for several values of chi.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        chi: Vec<f64>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Sample the minimal-speed traveling waves to CSV on stdout.
    Wave {
        #[arg(long, allow_negative_numbers = true)]
        chi: f64,
        /// u, p or rho.
        #[arg(long)]
        model: String,
        #[arg(long, allow_negative_numbers = true)]
        xmin: f64,
        #[arg(long, allow_negative_numbers = true)]
        xmax: f64,
        #[arg(long)]
        dx: f64,
    },
    /// Fit x(t) = c t - r log t + b to a trace and print a JSON report.
    Fit {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        tmin: Option<f64>,
        #[arg(long)]
        tmax: Option<f64>,
        /// Use the delay predicted for this chi instead of inferring it from c.
        #[arg(long)]
        chi: Option<f64>,
    },
    /// Check a trace against the upper envelope and print a JSON report.
    Check {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        chi: f64,
        #[arg(long)]
        i0: f64,
        #[arg(long, default_value = "p")]
        model: String,
        #[arg(long, default_value_t = 0.05)]
        dx: f64,
    },
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = read_config(&config)?;
            let out = out.or_else(|| cfg.output.out_dir.clone()).ok_or(CliError::Invalid {
                key: "out_dir".into(),
                reason: "give --out or set out_dir".into(),
            })?;
            let res = cmd_run(&cfg, &out)?;
            match res.envelope {
                Some(e) if !e.upper_ok => Err(CliError::CheckFailed(format!(
                    "upper envelope margin {} below -{}",
                    e.upper_margin, e.slack
                ))),
                _ => Ok(()),
            }
        }
        Command::Sweep {
            chi,
            config,
            out,
            jobs,
        } => {
            let cfg = read_config(&config)?;
            let rows = cmd_sweep(&cfg, &chi, &out, jobs)?;
            if let Some(r) = rows.iter().find(|r| r.error.is_some()) {
                return Err(CliError::Runtime(format!(
                    "chi = {}: {}",
                    r.chi,
                    r.error.as_deref().unwrap_or_default()
                )));
            }
            match rows.iter().filter(|r| !r.pass).count() {
                0 => Ok(()),
                n => Err(CliError::CheckFailed(format!("{n} sweep jobs failed their checks"))),
            }
        }
        Command::Wave {
            chi,
            model,
            xmin,
            xmax,
            dx,
        } => cmd_wave(chi, parse_model(&model)?, xmin, xmax, dx, io::stdout().lock()),
        Command::Fit {
            trace,
            c,
            tmin,
            tmax,
            chi,
        } => {
            let trace = read_trace(&trace)?;
            let window = match (tmin, tmax) {
                (None, None) => None,
                (a, b) => Some(FitWindow {
                    t_min: a.unwrap_or(1.0),
                    t_max: b.unwrap_or_else(|| trace.samples.last().map_or(0.0, |s| s.0)),
                }),
            };
            let report = cmd_fit(&trace, c, window, chi)?;
            print_json(&report)?;
            if report.pass {
                Ok(())
            } else {
                Err(CliError::CheckFailed(format!(
                    "r = {} is not within {} of {}",
                    report.r,
                    goggrow_cli::FIT_TOL,
                    report.r_theory
                )))
            }
        }
        Command::Check {
            trace,
            chi,
            i0,
            model,
            dx,
        } => {
            let trace = read_trace(&trace)?;
            let report = cmd_check(&trace, chi, i0, parse_model(&model)?, dx)?;
            print_json(&serde_json::json!({
                "upper_margin": report.upper_margin,
                "upper_ok": report.upper_ok,
                "slack": report.slack,
                "lower_b": report.lower_b,
                "checked": report.checked,
                "skipped": report.skipped,
            }))?;
            if report.upper_ok {
                Ok(())
            } else {
                Err(CliError::CheckFailed("upper envelope violated".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("goggrow: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
