//! Fluxes, minimal speed, wave-profile functions and the explicit minimal-speed waves.

use std::fmt;

use thiserror::Error;

use crate::specfun::{lambert_w_minus1, LambertDomainPoint, SpecfunError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("chi must be finite and nonnegative, got {0}")]
    Chi(f64),
    #[error("epsilon must lie in (0, 1/2), got {0}")]
    Epsilon(f64),
    #[error("argument {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Pulled,
    PushmiPullyu,
    Pushed,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Pulled => "pulled",
            Regime::PushmiPullyu => "pushmi-pullyu",
            Regime::Pushed => "pushed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiParams {
    pub chi: f64,
    pub chi_vee: f64,
    pub c_star: f64,
    pub regime: Regime,
}

pub fn minimal_speed(chi: f64) -> Result<ChiParams, ProfileError> {
    if !chi.is_finite() || chi < 0.0 {
        return Err(ProfileError::Chi(chi));
    }
    let (c_star, regime) = if chi > 1.0 {
        (chi + 1.0 / chi, Regime::Pushed)
    } else if chi == 1.0 {
        (2.0, Regime::PushmiPullyu)
    } else {
        (2.0, Regime::Pulled)
    };
    Ok(ChiParams {
        chi,
        chi_vee: chi.max(1.0),
        c_star,
        regime,
    })
}

/// The flux `A` of the general model `v_t + χ A(v)_x = v_xx + v − A(v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxSpec {
    /// `A(s) = s·1{s ≥ 1}`.
    LocalHeaviside,
    /// `A(s) = (s − 1)₊`.
    NonlocalRamp,
    /// Piecewise linear: 0 on `[0, 1−ε]`, slope `1/ε` on `[1−ε, 1]`.
    RegularizedLocal { epsilon: f64 },
}

impl FluxSpec {
    pub fn is_local(self) -> bool {
        !matches!(self, FluxSpec::NonlocalRamp)
    }

    pub fn validate(self) -> Result<(), ProfileError> {
        match self {
            FluxSpec::RegularizedLocal { epsilon } if !(epsilon > 0.0 && epsilon < 0.5) => {
                Err(ProfileError::Epsilon(epsilon))
            }
            _ => Ok(()),
        }
    }

    /// `A(s)` without domain checks. Local fluxes are continued by `A(s) = s` above 1.
    #[inline]
    pub fn eval(self, s: f64) -> f64 {
        match self {
            FluxSpec::LocalHeaviside => {
                if s >= 1.0 {
                    s
                } else {
                    0.0
                }
            }
            FluxSpec::NonlocalRamp => (s - 1.0).max(0.0),
            FluxSpec::RegularizedLocal { epsilon } => {
                if s >= 1.0 {
                    s
                } else if s <= 1.0 - epsilon {
                    0.0
                } else {
                    (s - 1.0) / epsilon + 1.0
                }
            }
        }
    }

    /// Right derivative `A′(s)` (0 for the jump of the Heaviside flux).
    pub fn derivative(self, s: f64) -> f64 {
        match self {
            FluxSpec::LocalHeaviside => {
                if s >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            FluxSpec::NonlocalRamp => {
                if s >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            FluxSpec::RegularizedLocal { epsilon } => {
                if s >= 1.0 {
                    1.0
                } else if s < 1.0 - epsilon {
                    0.0
                } else {
                    1.0 / epsilon
                }
            }
        }
    }

    /// Lipschitz constant on the range visited by solutions.
    pub fn lipschitz(self) -> f64 {
        match self {
            FluxSpec::LocalHeaviside => f64::INFINITY,
            FluxSpec::NonlocalRamp => 1.0,
            FluxSpec::RegularizedLocal { epsilon } => 1.0 / epsilon,
        }
    }

    fn check_domain(self, s: f64) -> Result<(), ProfileError> {
        let ok = s >= 0.0 && (!self.is_local() || s <= 1.0) && s.is_finite();
        if ok {
            Ok(())
        } else {
            Err(ProfileError::Domain {
                what: "the flux",
                value: s,
            })
        }
    }
}

pub fn flux(spec: FluxSpec, s: f64) -> Result<f64, ProfileError> {
    spec.validate()?;
    spec.check_domain(s)?;
    Ok(spec.eval(s))
}

/// Constants of the regularized wave profile `η^ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationConstants {
    pub psi_star: f64,
    pub m_eps: f64,
    pub k_eps: f64,
    /// `κ`, only defined for χ < 1.
    pub kappa: Option<f64>,
    /// `λ`, only defined for χ < 1.
    pub lambda: Option<f64>,
}

fn kappa(chi: f64) -> f64 {
    let a = 1.0 / (1.0 - chi);
    a * (-a).exp()
}

fn lambda(chi: f64) -> f64 {
    let a = (2.0 - chi) / (1.0 - chi);
    a * (-a).exp()
}

pub fn regularization_constants(
    chi: f64,
    epsilon: f64,
) -> Result<RegularizationConstants, ProfileError> {
    let params = minimal_speed(chi)?;
    FluxSpec::RegularizedLocal { epsilon }.validate()?;
    if params.chi >= 1.0 {
        let psi_star = chi * (1.0 - epsilon);
        return Ok(RegularizationConstants {
            psi_star,
            m_eps: psi_star / epsilon,
            k_eps: 0.0,
            kappa: None,
            lambda: None,
        });
    }
    let b = chi - 2.0 * epsilon;
    let psi_star = 0.5 * (b + (b * b + 4.0 * epsilon * (1.0 - epsilon)).sqrt());
    let kap = kappa(chi);
    // Matching e^{-k} η^u(e^k (1-ε)) = ψ* reduces to a Lambert equation in w = W₋₁(−κp),
    // p = e^k (1-ε); solve for w then invert.
    let w = -(1.0 - epsilon) / (1.0 - epsilon - psi_star);
    let p = (-w * w.exp() / kap).min(1.0);
    Ok(RegularizationConstants {
        psi_star,
        m_eps: psi_star / epsilon,
        k_eps: (p / (1.0 - epsilon)).ln(),
        kappa: Some(kap),
        lambda: Some(lambda(chi)),
    })
}

/// A wave-profile function `η` for one flux and one χ, with its constants precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveProfile {
    flux: FluxSpec,
    params: ChiParams,
    reg: Option<RegularizationConstants>,
}

impl WaveProfile {
    pub fn new(flux: FluxSpec, chi: f64) -> Result<Self, ProfileError> {
        let params = minimal_speed(chi)?;
        flux.validate()?;
        let reg = match flux {
            FluxSpec::RegularizedLocal { epsilon } => Some(regularization_constants(chi, epsilon)?),
            _ => None,
        };
        Ok(Self { flux, params, reg })
    }

    pub fn flux(&self) -> FluxSpec {
        self.flux
    }

    pub fn params(&self) -> ChiParams {
        self.params
    }

    pub fn regularization(&self) -> Option<RegularizationConstants> {
        self.reg
    }

    /// `η(s)` with `s` clamped into the flux domain.
    pub fn eval(&self, s: f64) -> f64 {
        let s = if self.flux.is_local() {
            s.clamp(0.0, 1.0)
        } else {
            s.max(0.0)
        };
        let chi = self.params.chi;
        match self.flux {
            FluxSpec::LocalHeaviside => eta_u(chi, s),
            FluxSpec::NonlocalRamp => {
                if s >= 1.0 {
                    1.0 / (self.params.c_star - chi)
                } else if chi >= 1.0 {
                    chi * s
                } else {
                    lambert_profile(lambda(chi), s)
                }
            }
            FluxSpec::RegularizedLocal { epsilon } => {
                let reg = self.reg.expect("regularized profile carries constants");
                if chi >= 1.0 {
                    chi * (s - self.flux.eval(s))
                } else if s <= 1.0 - epsilon {
                    let ek = reg.k_eps.exp();
                    eta_u(chi, ek * s) / ek
                } else {
                    reg.m_eps * (1.0 - s)
                }
            }
        }
    }

    pub fn eta(&self, s: f64) -> Result<f64, ProfileError> {
        self.flux.check_domain(s)?;
        Ok(self.eval(s))
    }

    /// `η′` read off from `cη − η′η − χA′η = s − A`, valid where `η > 0`.
    pub fn eta_prime(&self, s: f64) -> f64 {
        let eta = self.eval(s);
        self.params.c_star
            - self.params.chi * self.flux.derivative(s)
            - (s - self.flux.eval(s)) / eta
    }

    /// `Q = η + χA` and `R = (s − A)/η`, with one-sided limits where `η` vanishes.
    pub fn q_and_r(&self, s: f64) -> Result<(f64, f64), ProfileError> {
        self.flux.check_domain(s)?;
        let chi = self.params.chi;
        let a = self.flux.eval(s);
        let eta = self.eval(s);
        let q = eta + chi * a;
        let r = if s == 0.0 {
            1.0 / self.params.chi_vee
        } else if eta > 0.0 {
            (s - a) / eta
        } else {
            // Only the local kinds vanish at s = 1; take the left limit.
            match self.flux {
                FluxSpec::RegularizedLocal { epsilon } => {
                    let m = self.reg.expect("regularized profile carries constants").m_eps;
                    (1.0 - epsilon) / (epsilon * m)
                }
                _ => {
                    if chi > 0.0 {
                        1.0 / chi
                    } else {
                        f64::INFINITY
                    }
                }
            }
        };
        Ok((q, r))
    }
}

fn lambert_profile(k: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let y = -k * s;
    if y == 0.0 {
        // Underflow; η(s)/s → 1 as s → 0.
        return s;
    }
    let y = LambertDomainPoint::new(y).expect("argument lies in [-1/e, 0)");
    (1.0 + 1.0 / lambert_w_minus1(y)) * s
}

fn eta_u(chi: f64, s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else if chi >= 1.0 {
        chi * s
    } else {
        lambert_profile(kappa(chi), s)
    }
}

pub fn eta_local(chi: f64, s: f64) -> Result<f64, ProfileError> {
    WaveProfile::new(FluxSpec::LocalHeaviside, chi)?.eta(s)
}

pub fn eta_nonlocal(chi: f64, s: f64) -> Result<f64, ProfileError> {
    WaveProfile::new(FluxSpec::NonlocalRamp, chi)?.eta(s)
}

pub fn eta_regularized(chi: f64, epsilon: f64, s: f64) -> Result<f64, ProfileError> {
    WaveProfile::new(FluxSpec::RegularizedLocal { epsilon }, chi)?.eta(s)
}

pub fn q_and_r(spec: FluxSpec, chi: f64, s: f64) -> Result<(f64, f64), ProfileError> {
    WaveProfile::new(spec, chi)?.q_and_r(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveField {
    U,
    Rho,
    P,
}

/// Minimal-speed traveling wave, normalised so the front sits at `x = 0`.
///
/// Panics on negative or non-finite χ; use [`minimal_speed`] to validate first.
pub fn traveling_wave(field: WaveField, chi: f64, x: f64) -> f64 {
    assert!(chi.is_finite() && chi >= 0.0, "invalid chi {chi}");
    if chi >= 1.0 {
        let u = if x <= 0.0 { 1.0 } else { (-chi * x).exp() };
        match field {
            WaveField::U => u,
            WaveField::Rho => chi * u,
            WaveField::P => {
                if x <= 0.0 {
                    1.0 - chi * x
                } else {
                    u
                }
            }
        }
    } else {
        let d = 2.0 - chi;
        let u = if x <= 0.0 {
            1.0
        } else {
            ((1.0 - chi) * x + 1.0) * (-x).exp()
        };
        match field {
            WaveField::U => u,
            WaveField::Rho => u / d,
            WaveField::P => {
                if x <= 0.0 {
                    1.0 - x / d
                } else {
                    ((1.0 - chi) * x + d) / d * (-x).exp()
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speeds() {
        let p = minimal_speed(2.0).unwrap();
        assert_eq!((p.c_star, p.regime), (2.5, Regime::Pushed));
        assert_eq!(minimal_speed(1.0).unwrap().regime, Regime::PushmiPullyu);
        assert_eq!(minimal_speed(0.0).unwrap().c_star, 2.0);
        assert!(minimal_speed(-1.0).is_err());
        assert!(minimal_speed(f64::NAN).is_err());
    }

    #[test]
    fn flux_values() {
        assert_eq!(flux(FluxSpec::LocalHeaviside, 0.5).unwrap(), 0.0);
        assert_eq!(flux(FluxSpec::NonlocalRamp, 2.0).unwrap(), 1.0);
        let v = flux(FluxSpec::RegularizedLocal { epsilon: 0.1 }, 0.95).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        assert!(flux(FluxSpec::LocalHeaviside, 1.5).is_err());
        assert!(flux(FluxSpec::NonlocalRamp, -0.1).is_err());
        assert!(flux(FluxSpec::RegularizedLocal { epsilon: 0.6 }, 0.5).is_err());
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_local(2.0, 0.5).unwrap(), 1.0);
        for chi in [0.0, 0.5, 1.0, 2.0] {
            assert_eq!(eta_local(chi, 1.0).unwrap(), 0.0);
            assert_eq!(eta_nonlocal(chi, 0.0).unwrap(), 0.0);
        }
        assert_eq!(eta_nonlocal(2.0, 1.5).unwrap(), 2.0);
        assert_eq!(eta_nonlocal(1.0, 0.5).unwrap(), 0.5);
        let v = eta_local(0.5, 0.5).unwrap();
        assert!((0.25..=0.5).contains(&v));
        assert!((v - 0.341).abs() < 1e-3, "{v}");
    }

    #[test]
    fn regularization_example() {
        let c = regularization_constants(0.0, 0.25).unwrap();
        assert!((c.psi_star - 0.25).abs() < 1e-14);
        assert_eq!(eta_regularized(2.0, 0.1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn r_endpoints() {
        let (_, r) = q_and_r(FluxSpec::NonlocalRamp, 2.0, 0.0).unwrap();
        assert_eq!(r, 0.5);
        let (_, r) = q_and_r(FluxSpec::LocalHeaviside, 0.5, 1.0).unwrap();
        assert_eq!(r, 2.0);
        let (_, r) = q_and_r(FluxSpec::LocalHeaviside, 0.0, 1.0).unwrap();
        assert!(r.is_infinite());
        let (q, _) = q_and_r(FluxSpec::LocalHeaviside, 1.0, 0.5).unwrap();
        assert_eq!(q, 0.5);
    }

    #[test]
    fn wave_values() {
        assert!((traveling_wave(WaveField::U, 0.0, 1.0) - 2.0 / std::f64::consts::E).abs() < 1e-15);
        assert_eq!(traveling_wave(WaveField::U, 0.7, -3.0), 1.0);
        assert_eq!(traveling_wave(WaveField::P, 2.0, -1.0), 3.0);
        assert_eq!(traveling_wave(WaveField::U, 2.0, 0.0), 1.0);
    }
}
