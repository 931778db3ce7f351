//! Explicit monotone finite-difference integrator for
//! `v_t + χ A(v)_x = v_xx + v − A(v)` on a moving window.
//!
//! Fields live on the nodes `x_i = x_left + i·dx` of the chosen frame. Diffusion
//! is a centred second difference and the reaction is pointwise. The flux and
//! the frame drift use either central differences ([`Stencil::Central`]) or
//! upwinding from the left and the right respectively ([`Stencil::Upwind`]).
//! The central variant uses step lengths fitted to the weight `e^{z/χ∨}`, so the
//! discrete exponential moment obeys the same balance as the continuous one,
//! and it is only selected while the scheme stays monotone.

use thiserror::Error;

use crate::diagnostics::level_crossing;
use crate::profiles::{
    minimal_speed, traveling_wave, ChiParams, FluxSpec, ProfileError, WaveField,
};

const CLIP_TOL: f64 = 1e-12;
const RECENTRE_EVERY: u64 = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid `{key}`: {reason}")]
    Config { key: &'static str, reason: String },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("time step {dt} exceeds the stability limit {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("non-finite value at step {step}")]
    NonFinite { step: u64 },
    #[error("undershoot {value} at node {index}, step {step}")]
    Undershoot { step: u64, index: usize, value: f64 },
    #[error("observer failed: {0}")]
    Observer(String),
}

fn config_err(key: &'static str, reason: impl Into<String>) -> SolverError {
    SolverError::Config {
        key,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_left: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(x_left: f64, dx: f64, n: usize) -> Result<Self, SolverError> {
        let g = Self { x_left, dx, n };
        g.validate()?;
        Ok(g)
    }

    /// Grid covering `[x_min, x_max]` with spacing `dx`.
    pub fn spanning(x_min: f64, x_max: f64, dx: f64) -> Result<Self, SolverError> {
        if !(x_max > x_min) {
            return Err(config_err("grid", "x_max must exceed x_min"));
        }
        let n = ((x_max - x_min) / dx).round() as usize + 1;
        Self::new(x_min, dx, n)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(config_err("dx", format!("must be positive, got {}", self.dx)));
        }
        if !self.x_left.is_finite() {
            return Err(config_err("x_left", "must be finite"));
        }
        if self.n < 8 {
            return Err(config_err("n", format!("need at least 8 nodes, got {}", self.n)));
        }
        if (self.n as f64) * self.dx < 20.0 {
            return Err(config_err("n", "window narrower than 20"));
        }
        Ok(())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_left + i as f64 * self.dx
    }

    pub fn x_right(&self) -> f64 {
        self.x(self.n - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    Lab,
    Moving { c: f64 },
    /// Shift `c·t − r·log(t + t0)`.
    LogShifted { c: f64, r: f64, t0: f64 },
}

impl Frame {
    pub fn drift(&self, t: f64) -> f64 {
        match *self {
            Frame::Lab => 0.0,
            Frame::Moving { c } => c,
            Frame::LogShifted { c, r, t0 } => c - r / (t + t0),
        }
    }

    pub fn shift(&self, t: f64) -> f64 {
        match *self {
            Frame::Lab => 0.0,
            Frame::Moving { c } => c * t,
            Frame::LogShifted { c, r, t0 } => c * t - r * (t + t0).ln(),
        }
    }

    /// Lab position of frame coordinate `z` at time `t`; both agree at `t = 0`.
    pub fn to_lab(&self, z: f64, t: f64) -> f64 {
        z + self.shift(t) - self.shift(0.0)
    }

    pub fn to_frame(&self, x: f64, t: f64) -> f64 {
        x - self.shift(t) + self.shift(0.0)
    }

    fn max_drift(&self) -> f64 {
        match *self {
            Frame::Lab => 0.0,
            Frame::Moving { c } => c.abs(),
            Frame::LogShifted { c, r, t0 } => c.abs().max((c - r / t0).abs()),
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        match *self {
            Frame::Lab => Ok(()),
            Frame::Moving { c } if c.is_finite() => Ok(()),
            Frame::LogShifted { c, r, t0 } if c.is_finite() && r.is_finite() && t0 >= 1.0 => {
                Ok(())
            }
            _ => Err(config_err("frame", format!("invalid parameters {self:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Local model, primary field `u`.
    LocalU,
    /// Nonlocal model integrated through the cumulative mass `P`; `ρ` is derived.
    NonlocalP,
    /// Nonlocal model integrated through `ρ`; `P` is derived.
    NonlocalRho,
    /// `v_t = v_xx + v(1 − v)`, used as a comparison reference.
    Fkpp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonPolicy {
    Fixed(f64),
    /// `ε = multiple·dx`.
    GridTied(f64),
}

impl Default for EpsilonPolicy {
    fn default() -> Self {
        EpsilonPolicy::GridTied(2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitPreset {
    /// `amplitude·1{x ≤ 0}` for `u` or `ρ`; `P = amplitude·(−x)₊`.
    Heaviside { amplitude: f64 },
    /// Minimal-speed wave with its front at the origin.
    TravelingWave,
    /// `amplitude·exp(−(x − center)²/(2 width²))` for `u` or `ρ`.
    GaussianBump {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// Primary-field samples, linearly interpolated and held constant outside the table.
    FileTable { x: Vec<f64>, values: Vec<f64> },
}

impl Default for InitPreset {
    fn default() -> Self {
        InitPreset::Heaviside { amplitude: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPolicy {
    pub left_pad: f64,
    pub right_pad: f64,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        Self {
            left_pad: 60.0,
            right_pad: 80.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// Central first differences, with step lengths fitted to the weight `e^{z/χ∨}`.
    /// Falls back to [`Stencil::Upwind`] where the cell Péclet number breaks monotonicity.
    #[default]
    Central,
    /// Flux upwinded from the left, drift from the right, plain `dx`.
    Upwind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: Model,
    pub chi_params: ChiParams,
    pub flux: FluxSpec,
    pub grid: Grid1D,
    pub frame: Frame,
    pub cfl_sigma: f64,
    pub epsilon_policy: EpsilonPolicy,
    pub init: InitPreset,
    pub t_end: f64,
    pub window_policy: WindowPolicy,
    pub stencil: Stencil,
    /// Level offset for the local front `u = 1 − θ`; defaults to the regularization width.
    pub front_theta: Option<f64>,
    pub recentre: bool,
}

impl SimConfig {
    /// Heaviside run in the lab frame with default numerics on a window sized by the pads.
    pub fn new(model: Model, chi: f64, dx: f64, t_end: f64) -> Result<Self, SolverError> {
        let chi_params = minimal_speed(chi)?;
        let window_policy = WindowPolicy::default();
        let grid = Grid1D::spanning(
            -window_policy.left_pad,
            window_policy.right_pad + 10.0,
            dx,
        )?;
        let cfg = Self {
            model,
            chi_params,
            flux: default_flux(model),
            grid,
            frame: Frame::Lab,
            cfl_sigma: 0.4,
            epsilon_policy: EpsilonPolicy::default(),
            init: InitPreset::default(),
            t_end,
            window_policy,
            stencil: Stencil::default(),
            front_theta: None,
            recentre: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn chi(&self) -> f64 {
        self.chi_params.chi
    }

    /// The flux actually differenced: the sharp local flux is replaced by its regularization.
    pub fn effective_flux(&self) -> FluxSpec {
        match (self.model, self.flux) {
            (Model::LocalU, FluxSpec::LocalHeaviside) => FluxSpec::RegularizedLocal {
                epsilon: self.epsilon(),
            },
            (_, f) => f,
        }
    }

    /// The stencil used for stepping: central only while every off-diagonal
    /// coefficient of the update stays nonnegative.
    pub fn effective_stencil(&self) -> Stencil {
        if self.stencil == Stencil::Upwind {
            return Stencil::Upwind;
        }
        let lip = match self.model {
            Model::Fkpp => 0.0,
            _ => self.effective_flux().lipschitz(),
        };
        let (hd2, hs) = fitted_lengths(self);
        if (self.frame.max_drift() + self.chi() * lip) * hd2 <= 2.0 * hs {
            Stencil::Central
        } else {
            Stencil::Upwind
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self.epsilon_policy {
            EpsilonPolicy::Fixed(e) => e,
            EpsilonPolicy::GridTied(m) => m * self.grid.dx,
        }
    }

    /// Level whose rightmost crossing defines the front, and the field it is read from.
    pub fn front_level(&self) -> f64 {
        match self.model {
            Model::LocalU => {
                let theta = self.front_theta.unwrap_or_else(|| match self.effective_flux() {
                    FluxSpec::RegularizedLocal { epsilon } => epsilon,
                    _ => 1e-6,
                });
                1.0 - theta
            }
            Model::NonlocalP | Model::NonlocalRho => 1.0,
            Model::Fkpp => 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.grid.validate()?;
        self.frame.validate()?;
        minimal_speed(self.chi_params.chi)?;
        if !(self.cfl_sigma > 0.0 && self.cfl_sigma < 1.0) {
            return Err(config_err(
                "cfl_sigma",
                format!("must lie in (0, 1), got {}", self.cfl_sigma),
            ));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(config_err("t_end", "must be finite and nonnegative"));
        }
        match self.epsilon_policy {
            EpsilonPolicy::GridTied(m) if !(m >= 1.0 && m.is_finite()) => {
                return Err(config_err("epsilon", "grid-tied multiple must be at least 1"));
            }
            EpsilonPolicy::Fixed(e) if !(e > 0.0 && e < 0.5) => {
                return Err(config_err("epsilon", format!("must lie in (0, 1/2), got {e}")));
            }
            _ => {}
        }
        match (self.model, self.flux) {
            (Model::LocalU, FluxSpec::NonlocalRamp) => {
                return Err(config_err("flux", "the local model needs a local flux"));
            }
            (Model::NonlocalP | Model::NonlocalRho, f) if f != FluxSpec::NonlocalRamp => {
                return Err(config_err("flux", "the nonlocal model needs the ramp flux"));
            }
            _ => {}
        }
        self.effective_flux()
            .validate()
            .map_err(|e| config_err("epsilon", e.to_string()))?;
        if let Some(theta) = self.front_theta {
            if !(theta > 0.0 && theta < 1.0) {
                return Err(config_err("front_theta", "must lie in (0, 1)"));
            }
        }
        let wp = self.window_policy;
        if !(wp.left_pad >= 0.0 && wp.right_pad >= 0.0) {
            return Err(config_err("window", "pads must be nonnegative"));
        }
        if self.recentre && wp.left_pad + wp.right_pad + 2.0 > (self.grid.n - 1) as f64 * self.grid.dx
        {
            return Err(config_err("window", "pads do not fit inside the grid"));
        }
        Ok(())
    }
}

pub(crate) fn default_flux(model: Model) -> FluxSpec {
    match model {
        Model::LocalU | Model::Fkpp => FluxSpec::LocalHeaviside,
        Model::NonlocalP | Model::NonlocalRho => FluxSpec::NonlocalRamp,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    /// Left node in frame coordinates.
    pub x_left: f64,
    pub dx: f64,
    /// `u`, `P` or `ρ` depending on the model.
    pub primary: Vec<f64>,
    /// `ρ` for [`Model::NonlocalP`], `P` for [`Model::NonlocalRho`], empty otherwise.
    pub derived: Vec<f64>,
    pub clipped: u64,
    pub steps: u64,
}

impl SimState {
    pub fn len(&self) -> usize {
        self.primary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primary.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_left + i as f64 * self.dx
    }

    pub fn grid(&self) -> Grid1D {
        Grid1D {
            x_left: self.x_left,
            dx: self.dx,
            n: self.primary.len(),
        }
    }

    /// The cumulative mass `P` if the model has one.
    pub fn p_field(&self, model: Model) -> Option<&[f64]> {
        match model {
            Model::NonlocalP => Some(&self.primary),
            Model::NonlocalRho => Some(&self.derived),
            _ => None,
        }
    }

    /// The density `ρ` if the model has one.
    pub fn rho_field(&self, model: Model) -> Option<&[f64]> {
        match model {
            Model::NonlocalP => Some(&self.derived),
            Model::NonlocalRho => Some(&self.primary),
            _ => None,
        }
    }

    /// The field carrying the front level of the model.
    pub fn front_field(&self, model: Model) -> &[f64] {
        match model {
            Model::NonlocalRho => &self.derived,
            _ => &self.primary,
        }
    }

    fn refresh_derived(&mut self, model: Model) {
        match model {
            Model::NonlocalP => {
                let n = self.primary.len();
                self.derived.resize(n, 0.0);
                let inv = 1.0 / self.dx;
                for i in 0..n - 1 {
                    self.derived[i] = (self.primary[i] - self.primary[i + 1]) * inv;
                }
                self.derived[n - 1] = self.primary[n - 1] * inv;
            }
            Model::NonlocalRho => {
                self.derived = cumulative_mass_dx(&self.primary, self.dx);
            }
            Model::LocalU | Model::Fkpp => self.derived.clear(),
        }
    }
}

/// `P_i = dx·Σ_{j ≥ i} ρ_j`.
pub fn cumulative_mass(rho: &[f64], grid: &Grid1D) -> Vec<f64> {
    cumulative_mass_dx(rho, grid.dx)
}

fn cumulative_mass_dx(rho: &[f64], dx: f64) -> Vec<f64> {
    let mut p = vec![0.0; rho.len()];
    let mut acc = 0.0;
    for i in (0..rho.len()).rev() {
        acc += rho[i];
        p[i] = dx * acc;
    }
    p
}

fn interp_table(xs: &[f64], vs: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return vs[0];
    }
    if x >= xs[n - 1] {
        return vs[n - 1];
    }
    let j = xs.partition_point(|&a| a <= x);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let w = (x - x0) / (x1 - x0);
    vs[j - 1] * (1.0 - w) + vs[j] * w
}

fn validate_table(model: Model, xs: &[f64], vs: &[f64]) -> Result<(), SolverError> {
    if xs.len() != vs.len() || xs.len() < 2 {
        return Err(config_err("init", "table needs at least two rows of equal length"));
    }
    if xs.iter().chain(vs).any(|v| !v.is_finite()) {
        return Err(config_err("init", "table contains non-finite values"));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err("init", "table abscissae must increase strictly"));
    }
    if vs.iter().any(|&v| v < 0.0) {
        return Err(config_err("init", "table values must be nonnegative"));
    }
    match model {
        Model::LocalU | Model::Fkpp if vs.iter().any(|&v| v > 1.0) => {
            Err(config_err("init", "local values must lie in [0, 1]"))
        }
        Model::NonlocalP if vs.windows(2).any(|w| w[1] > w[0]) => {
            Err(config_err("init", "P must be nonincreasing"))
        }
        _ => Ok(()),
    }
}

pub fn make_state(cfg: &SimConfig) -> Result<SimState, SolverError> {
    cfg.validate()?;
    let g = cfg.grid;
    let chi = cfg.chi();
    let xs = (0..g.n).map(|i| g.x(i));
    // Density-like samples are converted to P through the cumulative mass.
    let (primary, from_density): (Vec<f64>, bool) = match &cfg.init {
        InitPreset::Heaviside { amplitude } => {
            let a = *amplitude;
            if !(a > 0.0 && a.is_finite()) || (matches!(cfg.model, Model::LocalU | Model::Fkpp) && a > 1.0)
            {
                return Err(config_err("amplitude", format!("invalid amplitude {a}")));
            }
            if cfg.model == Model::NonlocalP {
                // Exact mass of `a·1{x ≤ 0}` to the right of each node.
                (xs.map(|x| a * (-x).max(0.0)).collect(), false)
            } else {
                (xs.map(|x| if x <= 0.0 { a } else { 0.0 }).collect(), true)
            }
        }
        InitPreset::TravelingWave => {
            let field = match cfg.model {
                Model::LocalU | Model::Fkpp => WaveField::U,
                Model::NonlocalP => WaveField::P,
                Model::NonlocalRho => WaveField::Rho,
            };
            (xs.map(|x| traveling_wave(field, chi, x)).collect(), false)
        }
        InitPreset::GaussianBump {
            amplitude,
            center,
            width,
        } => {
            let (a, c, w) = (*amplitude, *center, *width);
            if !(a > 0.0 && w > 0.0 && c.is_finite() && a.is_finite() && w.is_finite())
                || (matches!(cfg.model, Model::LocalU | Model::Fkpp) && a > 1.0)
            {
                return Err(config_err("init", "invalid gaussian bump parameters"));
            }
            (
                xs.map(|x| a * (-(x - c) * (x - c) / (2.0 * w * w)).exp())
                    .collect(),
                true,
            )
        }
        InitPreset::FileTable { x, values } => {
            validate_table(cfg.model, x, values)?;
            (xs.map(|xi| interp_table(x, values, xi)).collect(), false)
        }
    };
    let primary: Vec<f64> = if from_density && cfg.model == Model::NonlocalP {
        cumulative_mass(&primary, &g)
    } else {
        primary
    };
    let mut state = SimState {
        t: 0.0,
        x_left: g.x_left,
        dx: g.dx,
        primary,
        derived: Vec::new(),
        clipped: 0,
        steps: 0,
    };
    state.refresh_derived(cfg.model);
    Ok(state)
}

pub fn stable_dt(cfg: &SimConfig) -> f64 {
    let dx = cfg.grid.dx;
    let lip = match cfg.model {
        Model::Fkpp => 0.0,
        _ => cfg.effective_flux().lipschitz(),
    };
    let adv = cfg.frame.max_drift() + cfg.chi() * lip;
    let adv_bound = if adv > 0.0 { dx / adv } else { f64::INFINITY };
    cfg.cfl_sigma * (0.5 * dx * dx).min(adv_bound).min(0.5)
}

/// Difference quotients of one step.
#[derive(Debug, Clone, Copy)]
struct Steps {
    central: bool,
    inv_diff: f64,
    /// `1/(2h)` for central first differences, `1/dx` for one-sided ones.
    inv_first: f64,
}

fn difference_steps(cfg: &SimConfig) -> Steps {
    let dx = cfg.grid.dx;
    match cfg.effective_stencil() {
        Stencil::Upwind => Steps {
            central: false,
            inv_diff: 1.0 / (dx * dx),
            inv_first: 1.0 / dx,
        },
        Stencil::Central => {
            let (hd2, hs) = fitted_lengths(cfg);
            Steps {
                central: true,
                inv_diff: 1.0 / hd2,
                inv_first: 0.5 / hs,
            }
        }
    }
}

/// `(h_D², h_S)` with `Σ e^{x_i/a}` annihilating `δ²/h_D² − 1/a²` and `δ/(2h_S) + 1/a`.
fn fitted_lengths(cfg: &SimConfig) -> (f64, f64) {
    let a = cfg.chi_params.chi_vee;
    let h = cfg.grid.dx / a;
    (2.0 * a * a * (h.cosh() - 1.0), a * h.sinh())
}

/// Scratch buffers reused across steps.
#[derive(Debug, Default)]
struct Workspace {
    next: Vec<f64>,
    flux: Vec<f64>,
}

pub fn step(state: &SimState, cfg: &SimConfig, dt: f64) -> Result<SimState, SolverError> {
    let limit = stable_dt(cfg);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-9) {
        return Err(SolverError::Cfl { dt, limit });
    }
    let mut next = state.clone();
    let mut ws = Workspace::default();
    advance(&mut next, cfg, dt, &difference_steps(cfg), &mut ws)?;
    next.refresh_derived(cfg.model);
    Ok(next)
}

/// One forward-Euler step in place. The derived field is only kept current for
/// [`Model::NonlocalRho`], which needs it inside the step; callers refresh it otherwise.
fn advance(
    state: &mut SimState,
    cfg: &SimConfig,
    dt: f64,
    h: &Steps,
    ws: &mut Workspace,
) -> Result<(), SolverError> {
    let n = state.primary.len();
    let chi = cfg.chi();
    let drift = cfg.frame.drift(state.t);
    let v = &state.primary;
    ws.next.resize(n, 0.0);
    ws.flux.resize(n, 0.0);

    // A(v), or α(P)·ρ for the density form.
    match (cfg.model, cfg.effective_flux()) {
        (Model::Fkpp, _) => ws.flux.fill(0.0),
        (Model::NonlocalRho, _) => {
            for ((f, &ri), &pi) in ws.flux.iter_mut().zip(v).zip(&state.derived) {
                *f = if pi >= 1.0 { ri } else { 0.0 };
            }
        }
        (_, FluxSpec::RegularizedLocal { epsilon }) => {
            let inv = 1.0 / epsilon;
            for (f, &vi) in ws.flux.iter_mut().zip(v) {
                let ramp = ((vi - 1.0) * inv + 1.0).max(0.0);
                *f = if vi >= 1.0 { vi } else { ramp };
            }
        }
        (_, flux) => {
            for (f, &vi) in ws.flux.iter_mut().zip(v) {
                *f = flux.eval(vi);
            }
        }
    }

    let k = Coeffs {
        cd: dt * h.inv_diff,
        cf: dt * chi * h.inv_first,
        cr: dt * drift * h.inv_first,
        dt,
    };
    let a = &ws.flux;
    let out = &mut ws.next;
    match (h.central, cfg.model == Model::Fkpp) {
        (true, false) => interior::<0, false>(v, a, out, k),
        (true, true) => interior::<0, true>(v, a, out, k),
        (false, fk) if drift >= 0.0 => {
            if fk {
                interior::<1, true>(v, a, out, k)
            } else {
                interior::<1, false>(v, a, out, k)
            }
        }
        (false, fk) => {
            if fk {
                interior::<2, true>(v, a, out, k)
            } else {
                interior::<2, false>(v, a, out, k)
            }
        }
    }
    out[0] = match cfg.model {
        Model::NonlocalP => 2.0 * out[1] - out[2],
        Model::NonlocalRho => out[1],
        Model::LocalU | Model::Fkpp => v[0],
    };
    out[n - 1] = 0.0;

    let step_no = state.steps + 1;
    let top = match cfg.model {
        Model::LocalU | Model::Fkpp => 1.0,
        _ => f64::MAX,
    };
    let in_range = out.iter().fold(true, |ok, &x| ok & (x >= 0.0) & (x <= top));
    if !in_range {
        state.clipped += clip(out, top, step_no)?;
    }
    std::mem::swap(&mut state.primary, &mut ws.next);
    state.t += dt;
    state.steps = step_no;
    if cfg.model == Model::NonlocalRho {
        state.refresh_derived(cfg.model);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Coeffs {
    cd: f64,
    cf: f64,
    cr: f64,
    dt: f64,
}

/// Interior update. `MODE`: 0 central, 1 drift upwinded from the right, 2 from the left.
#[inline(always)]
fn interior<const MODE: u8, const FKPP: bool>(v: &[f64], a: &[f64], out: &mut [f64], k: Coeffs) {
    let n = v.len();
    for i in 1..n - 1 {
        let (vl, vi, vr) = (v[i - 1], v[i], v[i + 1]);
        let (drift_term, flux_term) = match MODE {
            0 => (k.cr * (vr - vl), k.cf * (a[i + 1] - a[i - 1])),
            1 => (k.cr * (vr - vi), k.cf * (a[i] - a[i - 1])),
            _ => (k.cr * (vi - vl), k.cf * (a[i] - a[i - 1])),
        };
        let react = if FKPP { vi * (1.0 - vi) } else { vi - a[i] };
        out[i] = vi + k.cd * (vr - 2.0 * vi + vl) + drift_term - flux_term + k.dt * react;
    }
}

/// Clips roundoff excursions outside `[0, top]`; larger ones abort.
fn clip(out: &mut [f64], top: f64, step_no: u64) -> Result<u64, SolverError> {
    let mut clipped = 0;
    for (i, x) in out.iter_mut().enumerate() {
        if !x.is_finite() {
            return Err(SolverError::NonFinite { step: step_no });
        }
        let bound = if *x < 0.0 { 0.0 } else if *x > top { top } else { continue };
        if (*x - bound).abs() > CLIP_TOL {
            return Err(SolverError::Undershoot {
                step: step_no,
                index: i,
                value: *x - bound,
            });
        }
        *x = bound;
        clipped += 1;
    }
    Ok(clipped)
}

/// Shifts the window by whole cells so the front sits between the pads.
fn recentre(state: &mut SimState, cfg: &SimConfig) {
    let level = cfg.front_level();
    let Some(pos) = level_crossing(state.front_field(cfg.model), level) else {
        return;
    };
    let n = state.primary.len();
    let dx = state.dx;
    let offset = pos * dx;
    let span = (n - 1) as f64 * dx;
    let wp = cfg.window_policy;
    let k = if offset < wp.left_pad {
        -(((wp.left_pad - offset) / dx).ceil() as i64)
    } else if offset > span - wp.right_pad {
        ((offset - wp.left_pad) / dx).floor() as i64
    } else {
        return;
    };
    shift_cells(state, cfg.model, k);
}

/// Positive `k` drops `k` cells on the left and appends zeros; negative `k` extends
/// to the left with the boundary rule.
fn shift_cells(state: &mut SimState, model: Model, k: i64) {
    let n = state.primary.len();
    let v = &mut state.primary;
    if k > 0 {
        let k = (k as usize).min(n);
        v.drain(0..k);
        v.resize(n, 0.0);
    } else if k < 0 {
        let k = ((-k) as usize).min(n);
        let (v0, v1) = (v[0], v[1]);
        let fill: Vec<f64> = (1..=k)
            .rev()
            .map(|j| match model {
                Model::NonlocalP => v0 + j as f64 * (v0 - v1),
                _ => v0,
            })
            .collect();
        v.splice(0..0, fill);
        v.truncate(n);
    }
    state.x_left += k as f64 * state.dx;
    state.refresh_derived(model);
}

/// Callback invoked at observation times.
pub trait Observer {
    fn observe(&mut self, state: &SimState, cfg: &SimConfig) -> Result<(), SolverError>;
}

impl<F> Observer for F
where
    F: FnMut(&SimState, &SimConfig) -> Result<(), SolverError>,
{
    fn observe(&mut self, state: &SimState, cfg: &SimConfig) -> Result<(), SolverError> {
        self(state, cfg)
    }
}

/// Runs from the initial state to `cfg.t_end`, calling the observers at `t = 0`,
/// at every multiple of `cadence` and at `t_end`.
pub fn run(
    cfg: &SimConfig,
    cadence: Option<f64>,
    observers: &mut [&mut dyn Observer],
) -> Result<SimState, SolverError> {
    let state = make_state(cfg)?;
    run_from(state, cfg, cadence, observers)
}

pub fn run_from(
    mut state: SimState,
    cfg: &SimConfig,
    cadence: Option<f64>,
    observers: &mut [&mut dyn Observer],
) -> Result<SimState, SolverError> {
    cfg.validate()?;
    if let Some(c) = cadence {
        if !(c > 0.0 && c.is_finite()) {
            return Err(config_err("cadence", "must be positive"));
        }
    }
    let notify = |state: &mut SimState, observers: &mut [&mut dyn Observer]| {
        state.refresh_derived(cfg.model);
        observers.iter_mut().try_for_each(|o| o.observe(state, cfg))
    };
    notify(&mut state, observers)?;
    let dt = stable_dt(cfg);
    let h = difference_steps(cfg);
    let mut ws = Workspace::default();
    let mut next_obs_k: u64 = cadence.map_or(0, |c| (state.t / c).floor() as u64 + 1);
    let t_end = cfg.t_end;
    while state.t < t_end {
        let target = match cadence {
            Some(c) => (next_obs_k as f64 * c).min(t_end),
            None => t_end,
        };
        let remaining = target - state.t;
        let lands = remaining <= dt * (1.0 + 1e-9);
        let this_dt = if lands { remaining } else { dt };
        if this_dt > 0.0 {
            advance(&mut state, cfg, this_dt, &h, &mut ws)?;
        }
        if lands {
            state.t = target;
        }
        if cfg.recentre && state.steps.is_multiple_of(RECENTRE_EVERY) {
            recentre(&mut state, cfg);
        }
        if lands {
            if let Some(c) = cadence {
                while next_obs_k as f64 * c <= state.t * (1.0 + 1e-12) {
                    next_obs_k += 1;
                }
            }
            notify(&mut state, observers)?;
        }
    }
    state.refresh_derived(cfg.model);
    Ok(state)
}
