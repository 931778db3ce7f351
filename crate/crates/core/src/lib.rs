//! Numerical laboratory for "go or grow" aerotaxis fronts.
//!
//! The crate is organised bottom-up: [`specfun`] holds the Lambert W kernel,
//! [`profiles`] the closed-form waves and wave-profile functions, [`solver`] the
//! explicit monotone integrator, [`diagnostics`] the observables computed from a
//! solver state, and [`asymptotics`] the delay fits and analytic envelopes.

pub mod asymptotics;
pub mod diagnostics;
pub mod profiles;
pub mod solver;
pub mod specfun;

pub use asymptotics::{
    check_envelopes, fit_front_delay, fkpp_reference, supersolution_pp_local,
    supersolution_pulled, theoretical_delay, AsymptoticsError, DelayFit, EnvelopeReport,
    FitWindow, PulledModel, SupersolutionParams,
};
pub use diagnostics::{
    exponential_moment, front_location, rankine_hugoniot_residual, shape_defect,
    weighted_defect_sup, DiagnosticsError, FrontTrace, MomentKind, MomentTrace, MomentValue,
    ShapeDefectField, TraceRecorder, TraceRow,
};
pub use profiles::{
    eta_local, eta_nonlocal, eta_regularized, flux, minimal_speed, q_and_r,
    regularization_constants, traveling_wave, ChiParams, FluxSpec, ProfileError,
    RegularizationConstants, Regime, WaveField, WaveProfile,
};
pub use solver::{
    cumulative_mass, make_state, run, stable_dt, step, EpsilonPolicy, Frame, Grid1D, InitPreset,
    Model, Observer, SimConfig, SimState, SolverError, Stencil, WindowPolicy,
};
pub use specfun::{lambert_w_minus1, lambert_w_minus1_checked, LambertDomainPoint, SpecfunError};
