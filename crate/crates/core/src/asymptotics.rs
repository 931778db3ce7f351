//! Logarithmic-delay fits, explicit supersolution envelopes and the FKPP reference.

use thiserror::Error;

use crate::diagnostics::{front_location, FrontTrace};
use crate::profiles::{minimal_speed, ProfileError};
use crate::solver::{make_state, run, InitPreset, Model, SimConfig, SimState, SolverError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptoticsError {
    #[error("need at least {need} samples with t >= 1 in the fit window, found {found}")]
    InsufficientData { need: usize, found: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Coefficient `r` in `x̄(t) = c t − r log t + O(1)`.
pub fn theoretical_delay(chi: f64) -> f64 {
    if chi > 1.0 {
        0.0
    } else if chi == 1.0 {
        0.5
    } else {
        1.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    pub t_min: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayFit {
    pub r: f64,
    pub b: f64,
    pub stderr_r: f64,
    pub window: FitWindow,
    pub c_used: f64,
    pub samples: usize,
}

const MIN_FIT_SAMPLES: usize = 10;

/// Least squares of `x̄(t) − c t` against `(−log t, 1)`. The default window is `[T/8, T]`
/// with `T` the last sample time.
pub fn fit_front_delay(
    trace: &FrontTrace,
    c: f64,
    window: Option<FitWindow>,
) -> Result<DelayFit, AsymptoticsError> {
    let t_last = trace.samples.last().map_or(0.0, |s| s.0);
    let window = window.unwrap_or(FitWindow {
        t_min: t_last / 8.0,
        t_max: t_last,
    });
    if !(window.t_min >= 1.0 && window.t_max > window.t_min) {
        return Err(AsymptoticsError::InvalidParams(format!(
            "fit window [{}, {}] must satisfy 1 <= t_min < t_max",
            window.t_min, window.t_max
        )));
    }
    let pts: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .filter(|(t, _)| *t >= window.t_min && *t <= window.t_max)
        .map(|&(t, x)| (-t.ln(), x - c * t))
        .collect();
    let n = pts.len();
    if n < MIN_FIT_SAMPLES {
        return Err(AsymptoticsError::InsufficientData {
            need: MIN_FIT_SAMPLES,
            found: n,
        });
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(AsymptoticsError::InvalidParams("degenerate fit window".into()));
    }
    let r = sxy / sxx;
    let b = my - r * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - b - r * p.0).powi(2)).sum();
    let stderr_r = (ssr / (nf - 2.0) / sxx).sqrt();
    Ok(DelayFit {
        r,
        b,
        stderr_r,
        window,
        c_used: c,
        samples: n,
    })
}

/// Parameters of the explicit supersolutions `R = β·E·G·H` (pushmi-pullyu) and
/// `R = β·z·E·G·H` (pulled), with
/// `E = e^{−z}`, `G = e^{−z²/(4τ)}`, `H = e^{(z²/τ − K)/√τ}`, `τ = t + t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupersolutionParams {
    pub beta: f64,
    pub k: f64,
    pub t0: f64,
    pub kappa_exp: f64,
    pub gamma_amp: f64,
    pub s_slope: f64,
    pub eps_gap: f64,
}

/// `K̃` of the pulled construction.
pub const K_TILDE_PULLED: f64 = 16.0 + 9.0 / 16.0;

impl SupersolutionParams {
    pub fn pushmi_pullyu() -> Self {
        Self {
            beta: 3.0 * std::f64::consts::E,
            k: 4.5,
            t0: 400.0,
            kappa_exp: 0.5,
            gamma_amp: 1.0,
            s_slope: 0.5,
            eps_gap: 0.25,
        }
    }

    /// Pulled parameters for `χ < 1`; `left_slope` is the slope magnitude of `P_in` on the left.
    pub fn pulled(chi: f64, left_slope: f64) -> Result<Self, AsymptoticsError> {
        let p = minimal_speed(chi)?;
        if p.chi >= 1.0 {
            return Err(AsymptoticsError::InvalidParams("pulled parameters need chi < 1".into()));
        }
        let s_slope = (1.0 / (2.0 - chi)).max(left_slope);
        if !(s_slope < 1.0) {
            return Err(AsymptoticsError::InvalidParams(format!(
                "left slope {left_slope} must be below 1"
            )));
        }
        Ok(Self {
            k: 4.0 + K_TILDE_PULLED / 2.0,
            s_slope,
            eps_gap: (1.0 - s_slope) / 2.0,
            ..Self::pushmi_pullyu()
        })
    }

    /// Smallest `β` (times `margin`) for which the pulled local supersolution has
    /// a nonnegative shape defect right of its cusp.
    pub fn local_pulled_beta(chi: f64, k: f64, t0: f64, margin: f64) -> f64 {
        let kap = {
            let a = 1.0 / (1.0 - chi);
            a * (-a).exp()
        };
        let s = t0.sqrt();
        margin / kap * (s / (2.0 * (s - 4.0)) + k / s).exp()
    }

    /// Raises `β` and `t0` so the cusp slope satisfies `|R_z(t, z̄) + 1| ≤ eps_gap` for all `t`:
    /// the largest root of `β z e^{−z} = 1` is placed at `16/eps_gap` and `t0 ≫ z²`.
    pub fn with_cusp_control(self) -> Self {
        let z = 16.0 / self.eps_gap;
        Self {
            beta: z.exp() / z,
            t0: self.t0.max(100.0 * z * z),
            ..self
        }
    }

    fn validate(&self) -> Result<(), AsymptoticsError> {
        if !(self.beta > 0.0 && self.t0 >= 1.0 && self.k.is_finite()) {
            return Err(AsymptoticsError::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }
}

/// `log R`, its derivatives in `z` and `t`.
#[derive(Debug, Clone, Copy)]
struct LogR {
    phi: f64,
    phi_t: f64,
    phi_z: f64,
    phi_zz: f64,
}

fn log_r(p: &SupersolutionParams, t: f64, z: f64, pulled: bool) -> LogR {
    let tau = t + p.t0;
    let s = tau.sqrt();
    let t15 = tau * s;
    let mut out = LogR {
        phi: p.beta.ln() - z - z * z / (4.0 * tau) + (z * z / tau - p.k) / s,
        phi_t: z * z / (4.0 * tau * tau) - 1.5 * z * z / (tau * t15) + p.k / (2.0 * t15),
        phi_z: -1.0 - z / (2.0 * tau) + 2.0 * z / t15,
        phi_zz: -1.0 / (2.0 * tau) + 2.0 / t15,
    };
    if pulled {
        out.phi += z.ln();
        out.phi_z += 1.0 / z;
        out.phi_zz -= 1.0 / (z * z);
    }
    out
}

/// `R` of the pushmi-pullyu construction.
pub fn r_pp(p: &SupersolutionParams, t: f64, z: f64) -> f64 {
    log_r(p, t, z, false).phi.exp()
}

/// `R` of the pulled construction (zero for `z ≤ 0`).
pub fn r_pulled(p: &SupersolutionParams, t: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    log_r(p, t, z, true).phi.exp()
}

/// `R_z/R` of the pulled construction.
pub fn r_pulled_log_slope(p: &SupersolutionParams, t: f64, z: f64) -> f64 {
    log_r(p, t, z, true).phi_z
}

/// `(L_β R)/R` with `L_β f = f_t − f_zz − (2 − β/τ) f_z − f`.
fn l_ratio(p: &SupersolutionParams, t: f64, z: f64, pulled: bool, order: f64) -> f64 {
    let l = log_r(p, t, z, pulled);
    let tau = t + p.t0;
    l.phi_t - (l.phi_zz + l.phi_z * l.phi_z) - (2.0 - order / tau) * l.phi_z - 1.0
}

/// `(L_{1/2} R)/R` for the pushmi-pullyu `R`.
pub fn l_half_ratio(p: &SupersolutionParams, t: f64, z: f64) -> f64 {
    l_ratio(p, t, z, false, 0.5)
}

/// `(L_{3/2} R)/R` for the pulled `R`.
pub fn l_three_halves_ratio(p: &SupersolutionParams, t: f64, z: f64) -> f64 {
    l_ratio(p, t, z, true, 1.5)
}

/// `min{1, R}` with the pushmi-pullyu `R`.
pub fn supersolution_pp_local(params: &SupersolutionParams, t: f64, z: f64) -> f64 {
    r_pp(params, t, z).min(1.0)
}

/// Largest root of `R = 1` for the pulled `R`.
pub fn zbar_super(p: &SupersolutionParams, t: f64) -> Result<f64, AsymptoticsError> {
    p.validate()?;
    if p.beta <= std::f64::consts::E {
        return Err(AsymptoticsError::InvalidParams(format!(
            "beta = {} must exceed e",
            p.beta
        )));
    }
    let g = |z: f64| log_r(p, t, z, true).phi;
    let mut hi = 2.0 * p.beta.ln();
    if g(hi) >= 0.0 {
        return Err(AsymptoticsError::InvalidParams("no crossing below 2 log beta".into()));
    }
    // Walk left to the first point above 1, so the bracket holds the largest root.
    let step = 0.05;
    let mut lo = hi;
    while g(lo) < 0.0 {
        hi = lo;
        lo -= step;
        if lo < 1.0 {
            lo = 1.0;
            if g(lo) < 0.0 {
                return Err(AsymptoticsError::InvalidParams(
                    "R stays below 1 on [1, 2 log beta]".into(),
                ));
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..3 {
        let l = log_r(p, t, z, true);
        let next = z - l.phi / l.phi_z;
        if next.is_finite() && (lo - 1e-9..=hi + 1e-9).contains(&next) {
            z = next;
        }
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulledModel {
    LocalU,
    NonlocalP,
}

/// The pulled supersolution: `R` right of the cusp `z̄`, and on the left the plateau 1
/// (local) or the line `1 − ((1 + s)/2)(z − z̄)` (nonlocal).
pub fn supersolution_pulled(
    params: &SupersolutionParams,
    model: PulledModel,
    t: f64,
    z: f64,
) -> Result<f64, AsymptoticsError> {
    let zbar = zbar_super(params, t)?;
    if z >= zbar {
        return Ok(r_pulled(params, t, z));
    }
    Ok(match model {
        PulledModel::LocalU => 1.0,
        PulledModel::NonlocalP => 1.0 - 0.5 * (1.0 + params.s_slope) * (z - zbar),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    /// `min_t (c t + χ∨ log I − x̄(t))`, with `I = I(0)` (nonlocal) or `I(0)/χ∨` (local).
    pub upper_margin: f64,
    pub upper_ok: bool,
    pub slack: f64,
    /// `max_t (2t − r* log(1 + t) − x̄(t))` for `χ ≤ 1`.
    pub lower_b: Option<f64>,
    pub checked: usize,
    pub skipped: usize,
}

/// Checks each sample against the easy upper bound, with slack `5·dx`.
/// Samples without a front are skipped and counted.
pub fn check_envelopes<I>(
    samples: I,
    chi: f64,
    i0: f64,
    model: Model,
    dx: f64,
) -> Result<EnvelopeReport, AsymptoticsError>
where
    I: IntoIterator<Item = (f64, Option<f64>)>,
{
    let p = minimal_speed(chi)?;
    if !(i0 > 0.0 && i0.is_finite()) {
        return Err(AsymptoticsError::InvalidParams(format!("I(0) = {i0} must be positive")));
    }
    let i_eff = match model {
        Model::LocalU | Model::Fkpp => i0 / p.chi_vee,
        Model::NonlocalP | Model::NonlocalRho => i0,
    };
    let offset = p.chi_vee * i_eff.ln();
    let r_star = theoretical_delay(chi);
    let mut upper_margin = f64::INFINITY;
    let mut lower_b = f64::NEG_INFINITY;
    let (mut checked, mut skipped) = (0, 0);
    for (t, x) in samples {
        let Some(x) = x.filter(|x| x.is_finite()) else {
            skipped += 1;
            continue;
        };
        checked += 1;
        upper_margin = upper_margin.min(p.c_star * t + offset - x);
        lower_b = lower_b.max(2.0 * t - r_star * (1.0 + t).ln() - x);
    }
    let slack = 5.0 * dx;
    Ok(EnvelopeReport {
        upper_margin,
        upper_ok: upper_margin >= -slack,
        slack,
        lower_b: (chi <= 1.0 && checked > 0).then_some(lower_b),
        checked,
        skipped,
    })
}

/// Initial data of the FKPP comparison: `u_in` for the local model,
/// `min{1, P_in(x + 1)}` for the nonlocal ones.
pub fn fkpp_initial(cfg: &SimConfig) -> Result<InitPreset, AsymptoticsError> {
    let state: SimState = make_state(cfg)?;
    let xs: Vec<f64> = (0..state.len()).map(|i| state.x(i)).collect();
    let values = match cfg.model {
        Model::LocalU | Model::Fkpp => state.primary.clone(),
        Model::NonlocalP | Model::NonlocalRho => {
            let p = state.p_field(cfg.model).expect("nonlocal models carry P");
            xs.iter()
                .map(|&x| {
                    let y = x + 1.0;
                    let j = (y - state.x_left) / state.dx;
                    let v = if j <= 0.0 {
                        p[0]
                    } else if j >= (p.len() - 1) as f64 {
                        0.0
                    } else {
                        let i = j.floor() as usize;
                        let w = j - i as f64;
                        p[i] * (1.0 - w) + p[i + 1] * w
                    };
                    v.min(1.0)
                })
                .collect()
        }
    };
    Ok(InitPreset::FileTable { x: xs, values })
}

/// Runs `v_t = v_xx + v(1 − v)` on the grid and frame of `cfg` from [`fkpp_initial`]
/// and records the `v = 1/2` front every `cadence` time units.
pub fn fkpp_reference(cfg: &SimConfig, cadence: f64) -> Result<FrontTrace, AsymptoticsError> {
    let fk = SimConfig {
        model: Model::Fkpp,
        chi_params: minimal_speed(0.0)?,
        init: fkpp_initial(cfg)?,
        ..cfg.clone()
    };
    let mut trace = FrontTrace::default();
    let mut obs = |s: &SimState, c: &SimConfig| {
        if let Ok(x) = front_location(s, c) {
            trace
                .push(s.t, x)
                .map_err(|e| SolverError::Observer(e.to_string()))?;
        }
        Ok(())
    };
    run(&fk, Some(cadence), &mut [&mut obs])?;
    Ok(trace)
}
