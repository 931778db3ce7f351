//! Run configuration files: three TOML tables, `[model]`, `[grid]` and `[output]`.
//! Unknown keys are rejected.

use std::path::PathBuf;

use goggrow::{
    make_state, minimal_speed, EpsilonPolicy, FluxSpec, Frame, Grid1D, InitPreset, Model,
    SimConfig, SolverError, Stencil, WindowPolicy,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSettings {
    pub out_dir: Option<PathBuf>,
    pub trace_every: f64,
    /// Snapshots are taken at observation times, so this is rounded up to a multiple of `trace_every`.
    pub snapshot_every: Option<f64>,
    /// Record the shape-defect columns of the trace.
    pub defects: bool,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            out_dir: None,
            trace_every: 1.0,
            snapshot_every: None,
            defects: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub output: OutputSettings,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: ModelTable,
    #[serde(default)]
    grid: GridTable,
    #[serde(default)]
    output: OutputTable,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelTable {
    model: Option<String>,
    chi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flux: Option<String>,
    /// Fixed regularization width of the local flux.
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    /// Regularization width as a multiple of `dx`.
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon_multiple: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    front_theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    init: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    center: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table_x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table_values: Option<Vec<f64>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridTable {
    dx: Option<f64>,
    t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cfl_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frame: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frame_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frame_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frame_t0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stencil: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    left_pad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    right_pad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    recentre: Option<bool>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_every: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    snapshot_every: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    defects: Option<bool>,
}

fn invalid(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn required<T>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| invalid(key, "missing"))
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_model(name: &str) -> Result<Model, CliError> {
    Ok(match name {
        "local_u" | "u" => Model::LocalU,
        "nonlocal_p" | "p" => Model::NonlocalP,
        "nonlocal_rho" | "rho" => Model::NonlocalRho,
        "fkpp" => Model::Fkpp,
        other => return Err(invalid("model", format!("unknown model `{other}`"))),
    })
}

pub fn model_name(model: Model) -> &'static str {
    match model {
        Model::LocalU => "local_u",
        Model::NonlocalP => "nonlocal_p",
        Model::NonlocalRho => "nonlocal_rho",
        Model::Fkpp => "fkpp",
    }
}

fn solver_err(e: SolverError) -> CliError {
    match e {
        SolverError::Config { key, reason } => invalid(key, reason),
        other => invalid("model", other.to_string()),
    }
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let file: FileConfig = toml::from_str(text).map_err(|e| CliError::Parse {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    build(file)
}

fn build(file: FileConfig) -> Result<RunConfig, CliError> {
    let m = file.model;
    let g = file.grid;
    let o = file.output;

    let model = parse_model(&required(m.model, "model")?)?;
    let chi = required(m.chi, "chi")?;
    let chi_params = minimal_speed(chi).map_err(|e| invalid("chi", e.to_string()))?;
    let dx = required(g.dx, "dx")?;
    let t_end = required(g.t_end, "t_end")?;
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(invalid("dx", format!("must be positive, got {dx}")));
    }

    let defaults = WindowPolicy::default();
    let window_policy = WindowPolicy {
        left_pad: g.left_pad.unwrap_or(defaults.left_pad),
        right_pad: g.right_pad.unwrap_or(defaults.right_pad),
    };
    let x_min = g.x_min.unwrap_or(-window_policy.left_pad);
    let x_max = g.x_max.unwrap_or(window_policy.right_pad + 10.0);
    let grid = Grid1D::spanning(x_min, x_max, dx).map_err(solver_err)?;

    let frame = match g.frame.as_deref().unwrap_or("lab") {
        "lab" => Frame::Lab,
        "moving" => Frame::Moving {
            c: g.frame_c.unwrap_or(chi_params.c_star),
        },
        "log_shifted" => Frame::LogShifted {
            c: g.frame_c.unwrap_or(chi_params.c_star),
            r: required(g.frame_r, "frame_r")?,
            t0: g.frame_t0.unwrap_or(1.0),
        },
        other => return Err(invalid("frame", format!("unknown frame `{other}`"))),
    };
    let stencil = match g.stencil.as_deref().unwrap_or("central") {
        "central" => Stencil::Central,
        "upwind" => Stencil::Upwind,
        other => return Err(invalid("stencil", format!("unknown stencil `{other}`"))),
    };

    let epsilon_policy = match (m.epsilon, m.epsilon_multiple) {
        (Some(_), Some(_)) => {
            return Err(invalid("epsilon", "give either `epsilon` or `epsilon_multiple`"))
        }
        (Some(e), None) => EpsilonPolicy::Fixed(e),
        (None, Some(k)) => EpsilonPolicy::GridTied(k),
        (None, None) => EpsilonPolicy::default(),
    };
    let flux = match m.flux.as_deref() {
        None => match model {
            Model::LocalU | Model::Fkpp => FluxSpec::LocalHeaviside,
            _ => FluxSpec::NonlocalRamp,
        },
        Some("heaviside") => FluxSpec::LocalHeaviside,
        Some("ramp") => FluxSpec::NonlocalRamp,
        Some(other) => return Err(invalid("flux", format!("unknown flux `{other}`"))),
    };

    let init = match m.init.as_deref().unwrap_or("heaviside") {
        "heaviside" => InitPreset::Heaviside {
            amplitude: m.amplitude.unwrap_or(1.0),
        },
        "traveling_wave" => InitPreset::TravelingWave,
        "gaussian" => InitPreset::GaussianBump {
            amplitude: m.amplitude.unwrap_or(1.0),
            center: m.center.unwrap_or(0.0),
            width: m.width.unwrap_or(1.0),
        },
        "table" => InitPreset::FileTable {
            x: required(m.table_x, "table_x")?,
            values: required(m.table_values, "table_values")?,
        },
        other => return Err(invalid("init", format!("unknown initial data `{other}`"))),
    };

    let sim = SimConfig {
        model,
        chi_params,
        flux,
        grid,
        frame,
        cfl_sigma: g.cfl_sigma.unwrap_or(0.4),
        epsilon_policy,
        init,
        t_end,
        window_policy,
        stencil,
        front_theta: m.front_theta,
        recentre: g.recentre.unwrap_or(true),
    };
    // Building the initial state checks the initial data too, before any stepping.
    make_state(&sim).map_err(solver_err)?;

    let output = OutputSettings {
        out_dir: o.out_dir,
        trace_every: o.trace_every.unwrap_or(1.0),
        snapshot_every: o.snapshot_every,
        defects: o.defects.unwrap_or(true),
    };
    if !(output.trace_every > 0.0 && output.trace_every.is_finite()) {
        return Err(invalid("trace_every", "must be positive"));
    }
    if let Some(s) = output.snapshot_every {
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid("snapshot_every", "must be positive"));
        }
    }
    Ok(RunConfig { sim, output })
}

/// Canonical text form: every setting spelled out, so parsing it back gives an equal config.
pub fn emit_config(cfg: &RunConfig) -> String {
    let s = &cfg.sim;
    let (epsilon, epsilon_multiple) = match s.epsilon_policy {
        EpsilonPolicy::Fixed(e) => (Some(e), None),
        EpsilonPolicy::GridTied(k) => (None, Some(k)),
    };
    let mut model = ModelTable {
        model: Some(model_name(s.model).into()),
        chi: Some(s.chi()),
        flux: Some(
            match s.flux {
                FluxSpec::NonlocalRamp => "ramp",
                _ => "heaviside",
            }
            .into(),
        ),
        epsilon,
        epsilon_multiple,
        front_theta: s.front_theta,
        ..Default::default()
    };
    match &s.init {
        InitPreset::Heaviside { amplitude } => {
            model.init = Some("heaviside".into());
            model.amplitude = Some(*amplitude);
        }
        InitPreset::TravelingWave => model.init = Some("traveling_wave".into()),
        InitPreset::GaussianBump {
            amplitude,
            center,
            width,
        } => {
            model.init = Some("gaussian".into());
            model.amplitude = Some(*amplitude);
            model.center = Some(*center);
            model.width = Some(*width);
        }
        InitPreset::FileTable { x, values } => {
            model.init = Some("table".into());
            model.table_x = Some(x.clone());
            model.table_values = Some(values.clone());
        }
    }
    let (frame, frame_c, frame_r, frame_t0) = match s.frame {
        Frame::Lab => ("lab", None, None, None),
        Frame::Moving { c } => ("moving", Some(c), None, None),
        Frame::LogShifted { c, r, t0 } => ("log_shifted", Some(c), Some(r), Some(t0)),
    };
    let grid = GridTable {
        dx: Some(s.grid.dx),
        t_end: Some(s.t_end),
        x_min: Some(s.grid.x_left),
        x_max: Some(s.grid.x_right()),
        cfl_sigma: Some(s.cfl_sigma),
        frame: Some(frame.into()),
        frame_c,
        frame_r,
        frame_t0,
        stencil: Some(
            match s.stencil {
                Stencil::Central => "central",
                Stencil::Upwind => "upwind",
            }
            .into(),
        ),
        left_pad: Some(s.window_policy.left_pad),
        right_pad: Some(s.window_policy.right_pad),
        recentre: Some(s.recentre),
    };
    let output = OutputTable {
        out_dir: cfg.output.out_dir.clone(),
        trace_every: Some(cfg.output.trace_every),
        snapshot_every: cfg.output.snapshot_every,
        defects: Some(cfg.output.defects),
    };
    toml::to_string(&FileConfig {
        model,
        grid,
        output,
    })
    .expect("config tables serialize")
}
