//! Observables computed from a solver state: front location, shape defect,
//! exponential moments, Rankine–Hugoniot residuals.

use std::io::{self, Write};

use thiserror::Error;

use crate::profiles::{FluxSpec, ProfileError, WaveProfile};
use crate::solver::{Model, Observer, SimConfig, SimState, SolverError};

/// Nodes closer than this many cells to the front are left out of defect statistics.
const FRONT_EXCLUSION_CELLS: f64 = 2.0;

/// Integrand level at the right edge below which a moment tail counts as resolved.
const TAIL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("no front inside the window")]
    NoFront,
    #[error("{0} is not available for this model")]
    Unsupported(&'static str),
    #[error("moment order m must lie in (0, 1), got {0}")]
    MomentOrder(f64),
    #[error("trace times must increase strictly ({prev} then {next})")]
    NonIncreasingTime { prev: f64, next: f64 },
    #[error("front position must be finite")]
    NonFinite,
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Fractional index of the rightmost node pair where `values` drops from `≥ level`
/// to `< level`. `None` if there is no such pair or the right edge is above the level.
pub fn level_crossing(values: &[f64], level: f64) -> Option<f64> {
    let n = values.len();
    if n < 2 || values[n - 1] >= level {
        return None;
    }
    let i = (0..n - 1).rev().find(|&i| values[i] >= level)?;
    let (a, b) = (values[i], values[i + 1]);
    Some(i as f64 + (a - level) / (a - b))
}

/// Front position in lab coordinates.
pub fn front_location(state: &SimState, cfg: &SimConfig) -> Result<f64, DiagnosticsError> {
    let pos = front_index(state, cfg).ok_or(DiagnosticsError::NoFront)?;
    Ok(cfg.frame.to_lab(state.x_left + pos * state.dx, state.t))
}

fn front_index(state: &SimState, cfg: &SimConfig) -> Option<f64> {
    level_crossing(state.front_field(cfg.model), cfg.front_level())
}

/// Moving-frame coordinate `z = x − c*·t` of node `i`.
fn z_of(state: &SimState, cfg: &SimConfig, i: usize) -> f64 {
    cfg.frame.to_lab(state.x(i), state.t) - cfg.chi_params.c_star * state.t
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeDefectField {
    pub x_left: f64,
    pub dx: f64,
    pub values: Vec<f64>,
    pub weighted: bool,
    pub gamma: Option<f64>,
    /// Fractional index of the front, if one was found.
    pub front_index: Option<f64>,
}

impl ShapeDefectField {
    fn kept(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().enumerate().filter_map(move |(i, &v)| match self.front_index {
            Some(p) if (i as f64 - p).abs() < FRONT_EXCLUSION_CELLS => None,
            _ => Some(v),
        })
    }

    /// Minimum away from the front.
    pub fn min(&self) -> f64 {
        self.kept().fold(f64::INFINITY, f64::min)
    }

    /// Largest absolute value away from the front.
    pub fn sup_abs(&self) -> f64 {
        self.kept().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The profile `η` matching the field a model carries.
fn model_profile(cfg: &SimConfig) -> Result<WaveProfile, DiagnosticsError> {
    let flux = match cfg.model {
        Model::LocalU => cfg.effective_flux(),
        Model::NonlocalP | Model::NonlocalRho => FluxSpec::NonlocalRamp,
        Model::Fkpp => return Err(DiagnosticsError::Unsupported("shape defect")),
    };
    Ok(WaveProfile::new(flux, cfg.chi())?)
}

/// `ω = −v_x − η(v)`, optionally times `e^{z/χ∨}` and `ζ_γ(z) = e^{−γ√(1+z²)}`.
pub fn shape_defect(
    state: &SimState,
    cfg: &SimConfig,
    weighted: bool,
    gamma: Option<f64>,
) -> Result<ShapeDefectField, DiagnosticsError> {
    let profile = model_profile(cfg)?;
    let v = match cfg.model {
        Model::NonlocalRho => &state.derived,
        _ => &state.primary,
    };
    let n = v.len();
    let inv = 1.0 / state.dx;
    let a = cfg.chi_params.chi_vee;
    let values = (0..n)
        .map(|i| {
            let slope = if i == 0 {
                (v[1] - v[0]) * inv
            } else if i == n - 1 {
                (v[n - 1] - v[n - 2]) * inv
            } else {
                0.5 * (v[i + 1] - v[i - 1]) * inv
            };
            let mut w = -slope - profile.eval(v[i]);
            if weighted || gamma.is_some() {
                let z = z_of(state, cfg, i);
                if weighted {
                    w *= (z / a).exp();
                }
                if let Some(g) = gamma {
                    w *= (-g * (1.0 + z * z).sqrt()).exp();
                }
            }
            w
        })
        .collect();
    Ok(ShapeDefectField {
        x_left: state.x_left,
        dx: state.dx,
        values,
        weighted,
        gamma,
        front_index: front_index(state, cfg),
    })
}

/// Sup of the weighted shape defect away from the front.
pub fn weighted_defect_sup(state: &SimState, cfg: &SimConfig) -> Result<f64, DiagnosticsError> {
    Ok(shape_defect(state, cfg, true, None)?.sup_abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentKind {
    Irho,
    IP,
    Iu,
    /// `∫ (e^{mz} + e^{−mz}) e^z ρ̃ dz`.
    Im(f64),
}

impl MomentKind {
    pub fn default_for(model: Model) -> Self {
        match model {
            Model::LocalU | Model::Fkpp => MomentKind::Iu,
            Model::NonlocalP | Model::NonlocalRho => MomentKind::Irho,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentValue {
    pub value: f64,
    /// Whether the integrand had decayed below `1e-10` at the right edge.
    pub tail_resolved: bool,
}

pub fn exponential_moment(
    state: &SimState,
    cfg: &SimConfig,
    kind: MomentKind,
) -> Result<MomentValue, DiagnosticsError> {
    let field = match kind {
        MomentKind::Irho | MomentKind::Im(_) => state.rho_field(cfg.model),
        MomentKind::IP => state.p_field(cfg.model),
        MomentKind::Iu => match cfg.model {
            Model::LocalU | Model::Fkpp => Some(&state.primary[..]),
            _ => None,
        },
    }
    .ok_or(DiagnosticsError::Unsupported("this moment"))?;
    let a = cfg.chi_params.chi_vee;
    let rates: [f64; 2] = match kind {
        MomentKind::Im(m) => {
            if !(m > 0.0 && m < 1.0) {
                return Err(DiagnosticsError::MomentOrder(m));
            }
            [1.0 + m, 1.0 - m]
        }
        _ => [1.0 / a, f64::NAN],
    };
    let n = field.len();
    if n == 0 {
        return Ok(MomentValue {
            value: 0.0,
            tail_resolved: true,
        });
    }
    // `ρ` derived from `P` is a cell average on `[x_i, x_{i+1}]`; weigh it at the midpoint.
    let cell_average = cfg.model == Model::NonlocalP && !matches!(kind, MomentKind::IP);
    let z0 = z_of(state, cfg, 0) + if cell_average { 0.5 * state.dx } else { 0.0 };
    let dx = state.dx;
    let ratios = rates.map(|k| (k * dx).exp());
    // Weights by recurrence, re-anchored every 64 nodes so the drift stays at roundoff.
    let mut w = [0.0; 2];
    let mut sum = 0.0;
    let mut tail = 0.0f64;
    for (i, &v) in field.iter().enumerate() {
        for j in 0..2 {
            w[j] = if i % 64 == 0 {
                (rates[j] * (z0 + i as f64 * dx)).exp()
            } else {
                w[j] * ratios[j]
            };
        }
        let f = v * (w[0] + if rates[1].is_nan() { 0.0 } else { w[1] });
        sum += if i == 0 || i == n - 1 { 0.5 * f } else { f };
        // The right node is pinned to zero; judge the tail by its neighbour too.
        if i + 2 >= n {
            tail = tail.max(f.abs());
        }
    }
    Ok(MomentValue {
        value: sum * state.dx,
        tail_resolved: tail <= TAIL_TOL,
    })
}

fn quadratic_fit_at(xs: [f64; 3], ys: [f64; 3], x: f64) -> (f64, f64) {
    // Lagrange form: value and derivative at x.
    let [x0, x1, x2] = xs;
    let [y0, y1, y2] = ys;
    let l0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
    let l1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2));
    let l2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
    let d0 = (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
    let d1 = (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
    let d2 = (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
    (y0 * l0 + y1 * l1 + y2 * l2, y0 * d0 + y1 * d1 + y2 * d2)
}

/// Local: `|u_x⁺ + χ|`. Nonlocal: `|ρ_x⁺ − ρ_x⁻ + χ ρ(x̄)|`.
pub fn rankine_hugoniot_residual(state: &SimState, cfg: &SimConfig) -> Result<f64, DiagnosticsError> {
    let pos = front_index(state, cfg).ok_or(DiagnosticsError::NoFront)?;
    let chi = cfg.chi();
    let dx = state.dx;
    match cfg.model {
        Model::LocalU => {
            let u = &state.primary;
            let j = pos.ceil() as usize;
            if j + 2 >= u.len() {
                return Err(DiagnosticsError::NoFront);
            }
            let slope = (u[j + 2] - u[j]) / (2.0 * dx);
            Ok((slope + chi).abs())
        }
        Model::NonlocalP | Model::NonlocalRho => {
            let p = state.p_field(cfg.model).expect("nonlocal models carry P");
            let n = p.len();
            let rho = |i: usize| (p[i - 1] - p[i + 1]) / (2.0 * dx);
            let jl = pos.floor() as isize - 2;
            let jr = pos.ceil() as usize + 2;
            if jl < 3 || jr + 3 >= n {
                return Err(DiagnosticsError::NoFront);
            }
            let jl = jl as usize;
            let left_idx = [jl - 2, jl - 1, jl];
            let right_idx = [jr, jr + 1, jr + 2];
            let fit = |idx: [usize; 3]| {
                quadratic_fit_at(idx.map(|i| i as f64), idx.map(rho), pos)
            };
            let (vl, dl) = fit(left_idx);
            let (vr, dr) = fit(right_idx);
            let rho_front = 0.5 * (vl + vr);
            Ok(((dr - dl) / dx + chi * rho_front).abs())
        }
        Model::Fkpp => Err(DiagnosticsError::Unsupported("Rankine-Hugoniot residual")),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrontTrace {
    pub samples: Vec<(f64, f64)>,
}

impl FrontTrace {
    pub fn push(&mut self, t: f64, x: f64) -> Result<(), DiagnosticsError> {
        if !x.is_finite() {
            return Err(DiagnosticsError::NonFinite);
        }
        if let Some(&(prev, _)) = self.samples.last() {
            if t <= prev {
                return Err(DiagnosticsError::NonIncreasingTime { prev, next: t });
            }
        }
        self.samples.push((t, x));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Front position at `t` by linear interpolation between samples.
    pub fn at(&self, t: f64) -> Option<f64> {
        let s = &self.samples;
        let j = s.partition_point(|&(ti, _)| ti < t);
        if j < s.len() && s[j].0 == t {
            return Some(s[j].1);
        }
        if j == 0 || j == s.len() {
            return None;
        }
        let ((t0, x0), (t1, x1)) = (s[j - 1], s[j]);
        Some(x0 + (x1 - x0) * (t - t0) / (t1 - t0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentTrace {
    pub kind: MomentKind,
    pub samples: Vec<(f64, f64)>,
}

/// One observation of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub x_front: Option<f64>,
    pub moment: f64,
    pub moment_tail_resolved: bool,
    pub min_shape_defect: Option<f64>,
    pub weighted_defect_sup: Option<f64>,
    pub rh_residual: Option<f64>,
}

/// Observer collecting a [`TraceRow`] at every observation.
#[derive(Debug, Clone)]
pub struct TraceRecorder {
    pub kind: MomentKind,
    /// Compute the shape-defect columns (costly for χ < 1).
    pub with_defects: bool,
    pub rows: Vec<TraceRow>,
}

impl TraceRecorder {
    pub fn new(model: Model) -> Self {
        Self {
            kind: MomentKind::default_for(model),
            with_defects: true,
            rows: Vec::new(),
        }
    }

    pub fn front_trace(&self) -> FrontTrace {
        FrontTrace {
            samples: self
                .rows
                .iter()
                .filter_map(|r| r.x_front.map(|x| (r.t, x)))
                .collect(),
        }
    }

    pub fn moment_trace(&self) -> MomentTrace {
        MomentTrace {
            kind: self.kind,
            samples: self.rows.iter().map(|r| (r.t, r.moment)).collect(),
        }
    }

    pub fn record(&mut self, state: &SimState, cfg: &SimConfig) -> Result<TraceRow, DiagnosticsError> {
        let moment = exponential_moment(state, cfg, self.kind)?;
        let (min_sd, wsup) = if self.with_defects && cfg.model != Model::Fkpp {
            let sd = shape_defect(state, cfg, false, None)?;
            (Some(sd.min()), Some(weighted_defect_sup(state, cfg)?))
        } else {
            (None, None)
        };
        let row = TraceRow {
            t: state.t,
            x_front: front_location(state, cfg).ok(),
            moment: moment.value,
            moment_tail_resolved: moment.tail_resolved,
            min_shape_defect: min_sd,
            weighted_defect_sup: wsup,
            rh_residual: rankine_hugoniot_residual(state, cfg).ok(),
        };
        self.rows.push(row);
        Ok(row)
    }

    /// CSV with header `t,x_front,I,min_shape_defect,weighted_defect_sup,rh_residual`;
    /// missing values are left empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x_front,I,min_shape_defect,weighted_defect_sup,rh_residual")?;
        let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                format_number(r.t),
                opt(r.x_front),
                format_number(r.moment),
                opt(r.min_shape_defect),
                opt(r.weighted_defect_sup),
                opt(r.rh_residual)
            )?;
        }
        Ok(())
    }
}

impl Observer for TraceRecorder {
    fn observe(&mut self, state: &SimState, cfg: &SimConfig) -> Result<(), SolverError> {
        self.record(state, cfg)
            .map(|_| ())
            .map_err(|e| SolverError::Observer(e.to_string()))
    }
}

/// Formats with 12 significant digits in the style of `%.12g`.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (11 - exp) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
