//! Library side of the `goggrow` command: config files, run orchestration, sweeps and
//! the CSV/JSON writers. Every number written to CSV goes through [`format_number`].

pub mod config;

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use goggrow::diagnostics::format_number;
use goggrow::{
    check_envelopes, eta_local, eta_nonlocal, fit_front_delay, minimal_speed, run,
    theoretical_delay, traveling_wave, DelayFit, EnvelopeReport, FitWindow, FrontTrace, Model,
    SimConfig, SimState, SolverError, TraceRecorder, WaveField,
};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use config::{emit_config, parse_config, parse_model, OutputSettings, RunConfig};

/// Largest `|r − r_theory|` accepted by the fit and sweep checks.
pub const FIT_TOL: f64 = 0.25;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("run aborted: {0}")]
    Runtime(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Invalid { .. } => 1,
            CliError::Io { .. } | CliError::Runtime(_) => 2,
            CliError::CheckFailed(_) => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

pub fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_config(&text)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path)(e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub chi: f64,
    pub t_final: f64,
    pub x_front: Option<f64>,
    /// `max_t |I(t) − I(0)| / I(0)`.
    pub moment_drift: Option<f64>,
    pub min_shape_defect: Option<f64>,
    /// Worst margin of the upper envelope `c*t + χ∨ log I(0)`.
    pub envelope_margin: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub trace: FrontTrace,
    pub envelope: Option<EnvelopeReport>,
}

fn snapshot_header(model: Model) -> &'static str {
    match model {
        Model::LocalU | Model::Fkpp => "x,u",
        Model::NonlocalP | Model::NonlocalRho => "x,rho,P",
    }
}

fn write_snapshot(dir: &Path, s: &SimState, cfg: &SimConfig) -> Result<(), CliError> {
    let path = dir.join(format!("snapshot_{}.csv", format_number(s.t)));
    let mut w = create(&path)?;
    let mut body = String::with_capacity(s.len() * 40);
    body.push_str(snapshot_header(cfg.model));
    body.push('\n');
    for i in 0..s.len() {
        let x = format_number(cfg.frame.to_lab(s.x(i), s.t));
        match (s.rho_field(cfg.model), s.p_field(cfg.model)) {
            (Some(rho), Some(p)) => {
                body.push_str(&format!("{x},{},{}\n", format_number(rho[i]), format_number(p[i])))
            }
            _ => body.push_str(&format!("{x},{}\n", format_number(s.primary[i]))),
        }
    }
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(io_err(&path))
}

fn summarize(rec: &TraceRecorder, cfg: &SimConfig) -> (RunSummary, Option<EnvelopeReport>) {
    let first = rec.rows.first();
    let last = rec.rows.last();
    let i0 = first.map(|r| r.moment).filter(|&v| v > 0.0);
    let moment_drift = i0.map(|i0| {
        rec.rows
            .iter()
            .map(|r| (r.moment - i0).abs() / i0)
            .fold(0.0, f64::max)
    });
    let min_sd = rec
        .rows
        .iter()
        .filter_map(|r| r.min_shape_defect)
        .reduce(f64::min);
    let envelope = i0.and_then(|i0| {
        check_envelopes(
            rec.rows.iter().map(|r| (r.t, r.x_front)),
            cfg.chi(),
            i0,
            cfg.model,
            cfg.grid.dx,
        )
        .ok()
        .filter(|e| e.checked > 0)
    });
    let summary = RunSummary {
        chi: cfg.chi(),
        t_final: last.map_or(0.0, |r| r.t),
        x_front: last.and_then(|r| r.x_front),
        moment_drift,
        min_shape_defect: min_sd,
        envelope_margin: envelope.as_ref().map(|e| e.upper_margin),
    };
    (summary, envelope)
}

/// Runs one configuration into `out`, writing `trace.csv`, `summary.json` and any snapshots.
/// The trace is written even when the solver aborts.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> Result<RunOutput, CliError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let sim = &cfg.sim;
    let mut rec = TraceRecorder::new(sim.model);
    rec.with_defects = cfg.output.defects;
    let mut next_snapshot = 0.0;
    let mut snapshot_err = None;
    let mut snapshots = |s: &SimState, c: &SimConfig| {
        if let Some(every) = cfg.output.snapshot_every {
            if s.t >= next_snapshot * (1.0 - 1e-12) {
                if let Err(e) = write_snapshot(out, s, c) {
                    let msg = e.to_string();
                    snapshot_err = Some(e);
                    return Err(SolverError::Observer(msg));
                }
                while next_snapshot <= s.t * (1.0 + 1e-12) {
                    next_snapshot += every;
                }
            }
        }
        Ok(())
    };
    let result = run(sim, Some(cfg.output.trace_every), &mut [&mut rec, &mut snapshots]);

    let trace_path = out.join("trace.csv");
    let mut w = create(&trace_path)?;
    rec.write_csv(&mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(&trace_path))?;
    if let Some(e) = snapshot_err {
        return Err(e);
    }
    result.map_err(|e| CliError::Runtime(e.to_string()))?;

    let (summary, envelope) = summarize(&rec, sim);
    write_json(&out.join("summary.json"), &summary)?;
    Ok(RunOutput {
        summary,
        trace: rec.front_trace(),
        envelope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub r: f64,
    pub b: f64,
    pub stderr_r: f64,
    pub r_theory: f64,
    pub pass: bool,
}

impl FitReport {
    pub fn new(fit: &DelayFit, r_theory: f64) -> Self {
        Self {
            r: fit.r,
            b: fit.b,
            stderr_r: fit.stderr_r,
            r_theory,
            pass: (fit.r - r_theory).abs() <= FIT_TOL,
        }
    }
}

/// Delay coefficient expected from the front speed alone: pushed above 2, pulled at 2.
pub fn delay_from_speed(c: f64) -> f64 {
    if c > 2.0 {
        0.0
    } else {
        1.5
    }
}

/// Reads `(t, x_front)` pairs from a trace CSV with those column names; empty fronts are skipped.
pub fn read_trace(path: &Path) -> Result<FrontTrace, CliError> {
    let file = File::open(path).map_err(io_err(path))?;
    let bad = |line: usize, message: String| CliError::Parse { line, message };
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| bad(1, "empty trace".into()))?
        .map_err(io_err(path))?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let col = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| bad(1, format!("missing column `{name}`")))
    };
    let (ti, xi) = (col("t")?, col("x_front")?);
    let mut trace = FrontTrace::default();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        let get = |i: usize| fields.get(i).copied().unwrap_or("");
        if get(xi).is_empty() {
            continue;
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| bad(k + 2, format!("`{s}`: {e}")))
        };
        trace
            .push(num(get(ti))?, num(get(xi))?)
            .map_err(|e| bad(k + 2, e.to_string()))?;
    }
    Ok(trace)
}

pub fn cmd_fit(
    trace: &FrontTrace,
    c: f64,
    window: Option<FitWindow>,
    chi: Option<f64>,
) -> Result<FitReport, CliError> {
    let r_theory = match chi {
        Some(chi) => {
            minimal_speed(chi).map_err(|e| CliError::Invalid {
                key: "chi".into(),
                reason: e.to_string(),
            })?;
            theoretical_delay(chi)
        }
        None => delay_from_speed(c),
    };
    let fit = fit_front_delay(trace, c, window).map_err(|e| CliError::Invalid {
        key: "trace".into(),
        reason: e.to_string(),
    })?;
    Ok(FitReport::new(&fit, r_theory))
}

pub fn cmd_check(
    trace: &FrontTrace,
    chi: f64,
    i0: f64,
    model: Model,
    dx: f64,
) -> Result<EnvelopeReport, CliError> {
    check_envelopes(
        trace.samples.iter().map(|&(t, x)| (t, Some(x))),
        chi,
        i0,
        model,
        dx,
    )
    .map_err(|e| CliError::Invalid {
        key: "check".into(),
        reason: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub chi: f64,
    pub c_star: f64,
    pub r_fit: Option<f64>,
    pub r_theory: f64,
    pub moment_drift: Option<f64>,
    pub pass: bool,
    /// Set when the job itself failed.
    pub error: Option<String>,
}

/// Per-job directory names; repeated values get an index suffix.
pub fn sweep_dirs(chis: &[f64]) -> Vec<String> {
    chis.iter()
        .enumerate()
        .map(|(k, chi)| {
            let base = format!("chi_{}", format_number(*chi));
            let dup = chis[..k].iter().filter(|c| *c == chi).count();
            if dup == 0 {
                base
            } else {
                format!("{base}_{dup}")
            }
        })
        .collect()
}

fn sweep_job(template: &RunConfig, chi: f64, dir: &Path) -> Result<SweepRow, CliError> {
    let c_star = minimal_speed(chi)
        .map_err(|e| CliError::Invalid {
            key: "chi".into(),
            reason: e.to_string(),
        })?
        .c_star;
    let mut cfg = template.clone();
    let old = cfg.sim.chi_params.c_star;
    cfg.sim.chi_params = minimal_speed(chi).expect("checked above");
    // A frame pinned to the old minimal speed follows the new one.
    match &mut cfg.sim.frame {
        goggrow::Frame::Moving { c } | goggrow::Frame::LogShifted { c, .. } if *c == old => {
            *c = c_star
        }
        _ => {}
    }
    cfg.sim.validate().map_err(|e| CliError::Invalid {
        key: "chi".into(),
        reason: e.to_string(),
    })?;
    let out = cmd_run(&cfg, dir)?;
    let r_theory = theoretical_delay(chi);
    let fit = fit_front_delay(&out.trace, c_star, None).ok();
    if let Some(f) = &fit {
        write_json(&dir.join("fit.json"), &FitReport::new(f, r_theory))?;
    }
    let fit_ok = fit.is_some_and(|f| (f.r - r_theory).abs() <= FIT_TOL);
    let envelope_ok = out.envelope.as_ref().is_none_or(|e| e.upper_ok);
    Ok(SweepRow {
        chi,
        c_star,
        r_fit: fit.map(|f| f.r),
        r_theory,
        moment_drift: out.summary.moment_drift,
        pass: fit_ok && envelope_ok,
        error: None,
    })
}

/// Runs one job per `χ` on at most `jobs` threads, then writes `sweep_summary.csv`.
pub fn cmd_sweep(
    template: &RunConfig,
    chis: &[f64],
    out: &Path,
    jobs: usize,
) -> Result<Vec<SweepRow>, CliError> {
    if chis.is_empty() {
        return Err(CliError::Invalid {
            key: "chi".into(),
            reason: "empty list".into(),
        });
    }
    if let Some(bad) = chis.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
        return Err(CliError::Invalid {
            key: "chi".into(),
            reason: format!("{bad} is not a nonnegative number"),
        });
    }
    if jobs == 0 {
        return Err(CliError::Invalid {
            key: "jobs".into(),
            reason: "must be at least 1".into(),
        });
    }
    fs::create_dir_all(out).map_err(io_err(out))?;
    let dirs = sweep_dirs(chis);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        chis.par_iter()
            .zip(dirs.par_iter())
            .map(|(&chi, dir)| {
                sweep_job(template, chi, &out.join(dir)).unwrap_or_else(|e| SweepRow {
                    chi,
                    c_star: minimal_speed(chi).map_or(f64::NAN, |p| p.c_star),
                    r_fit: None,
                    r_theory: theoretical_delay(chi),
                    moment_drift: None,
                    pass: false,
                    error: Some(e.to_string()),
                })
            })
            .collect()
    });

    let path = out.join("sweep_summary.csv");
    let mut w = create(&path)?;
    let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
    let mut body = String::from("chi,c_star,r_fit,r_theory,moment_drift,pass\n");
    for r in &rows {
        body.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_number(r.chi),
            format_number(r.c_star),
            opt(r.r_fit),
            format_number(r.r_theory),
            opt(r.moment_drift),
            r.pass
        ));
    }
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(io_err(&path))?;
    Ok(rows)
}

/// Writes the sampled minimal-speed waves on `[x_min, x_max]`.
///
/// `eta_of_value` is `η` of the selected field (`u`, or `P` for both nonlocal choices), and
/// `shape_defect_check` is `−v′ − η(v)` with a centred difference.
pub fn cmd_wave<W: Write>(
    chi: f64,
    model: Model,
    x_min: f64,
    x_max: f64,
    dx: f64,
    mut w: W,
) -> Result<(), CliError> {
    let invalid = |key: &str, reason: &str| CliError::Invalid {
        key: key.into(),
        reason: reason.into(),
    };
    minimal_speed(chi).map_err(|e| invalid("chi", &e.to_string()))?;
    if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
        return Err(invalid("xmin", "need finite xmin < xmax"));
    }
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(invalid("dx", "must be positive"));
    }
    type Eta = fn(f64, f64) -> Result<f64, goggrow::ProfileError>;
    let (field, eta): (WaveField, Eta) = match model {
        Model::LocalU | Model::Fkpp => (WaveField::U, eta_local),
        Model::NonlocalP | Model::NonlocalRho => (WaveField::P, eta_nonlocal),
    };
    let h = 1e-5;
    let n = ((x_max - x_min) / dx + 1e-9).floor() as usize + 1;
    let mut body = String::from("x,u_tw,rho_tw,P_tw,eta_of_value,shape_defect_check\n");
    for i in 0..n {
        let x = x_min + i as f64 * dx;
        let v = traveling_wave(field, chi, x);
        let e = eta(chi, v).map_err(|e| invalid("chi", &e.to_string()))?;
        let slope = (traveling_wave(field, chi, x + h) - traveling_wave(field, chi, x - h)) / (2.0 * h);
        body.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_number(x),
            format_number(traveling_wave(WaveField::U, chi, x)),
            format_number(traveling_wave(WaveField::Rho, chi, x)),
            format_number(traveling_wave(WaveField::P, chi, x)),
            format_number(e),
            format_number(-slope - e)
        ));
    }
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Io {
            path: PathBuf::from("-"),
            source: e,
        })
}
