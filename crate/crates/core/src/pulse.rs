//! Laser-pulse timing for sideband (U) pulses.
//!
//! The axial trap frequency is capped by the addressing optics: the minimum
//! ion spacing `ℓ·2.0/L^0.56` is set equal to `y·λ·F` (spot size times the
//! safety factor), which fixes `ν_x`. The U-pulse then lasts `t_U = πy/ν_x`.
//! V-pulses (carrier) are taken as instantaneous.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::chain::{FIT_COEFFICIENT, FIT_EXPONENT};
use crate::species::{IonSpecies, PhysicalConstants, TrapConfig};

/// Rounded timing prefactor in `t_U = 2.9 √(A y⁵ λ³ F³ L^1.68 / Z²)`, s·m^(−3/2).
pub const PRINTED_TIMING_CONSTANT: f64 = 2.9;

/// Validity ratios above this are reported as violating `(Ωη/2ν_x√L)² ≪ 1`.
pub const VALIDITY_WARNING_THRESHOLD: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum PulseError {
    #[error("ion count must be at least 2, got {0}")]
    IonCount(usize),
    #[error("Lamb-Dicke parameter is zero (laser perpendicular to the trap axis)")]
    NoCoupling,
}

/// First-principles timing prefactor `π √(4πε₀ u / (c³ e²))` for a spacing
/// law with coefficient `spacing_coefficient`.
pub fn derive_timing_constant_with(constants: &PhysicalConstants, spacing_coefficient: f64) -> f64 {
    let four_pi_eps0 = 4.0 * PI * constants.eps0;
    PI * (four_pi_eps0 * constants.u / (spacing_coefficient.powi(3) * constants.e * constants.e))
        .sqrt()
}

/// Timing prefactor re-derived with the fitted coefficient 2.0.
pub fn derive_timing_constant(constants: &PhysicalConstants) -> f64 {
    derive_timing_constant_with(constants, FIT_COEFFICIENT)
}

/// Largest axial angular frequency (rad/s) for which the minimum spacing
/// still equals `y·λ·F`.
pub fn axial_frequency_max(
    species: &IonSpecies,
    constants: &PhysicalConstants,
    ions: usize,
    cfg: &TrapConfig,
) -> Result<f64, PulseError> {
    if ions < 2 {
        return Err(PulseError::IonCount(ions));
    }
    let spot = cfg.safety * species.lambda() * cfg.f_number;
    let scale = spot * (ions as f64).powf(FIT_EXPONENT) / FIT_COEFFICIENT;
    let z = f64::from(species.z);
    Ok((z * z * constants.coulomb_e2() / (species.mass(constants) * scale.powi(3))).sqrt())
}

/// U-pulse duration from the closed form with prefactor `timing_constant`.
pub fn u_pulse_duration(
    species: &IonSpecies,
    ions: usize,
    cfg: &TrapConfig,
    timing_constant: f64,
) -> Result<f64, PulseError> {
    if ions < 2 {
        return Err(PulseError::IonCount(ions));
    }
    let z = f64::from(species.z);
    let y = cfg.safety;
    let arg = species.mass_number
        * y.powi(5)
        * species.lambda().powi(3)
        * cfg.f_number.powi(3)
        * (ions as f64).powf(3.0 * FIT_EXPONENT)
        / (z * z);
    Ok(timing_constant * arg.sqrt())
}

/// Lamb-Dicke parameter `η = √(ħω²cos²θ / (2Mc²ν_x))`.
pub fn lamb_dicke(
    species: &IonSpecies,
    constants: &PhysicalConstants,
    nu_x: f64,
    theta: f64,
) -> f64 {
    let omega = 2.0 * PI * constants.c / species.lambda();
    // cos(π/2) rounds to 6e-17; a beam that perpendicular has no axial projection.
    let cos = match theta.cos() {
        c if c.abs() < 1e-15 => 0.0,
        c => c,
    };
    (constants.hbar * omega * omega * cos * cos
        / (2.0 * species.mass(constants) * constants.c * constants.c * nu_x))
        .sqrt()
}

/// `(Ωη / (2ν_x√L))²`.
pub fn validity_ratio(omega: f64, eta: f64, nu_x: f64, ions: usize) -> f64 {
    (omega * eta / (2.0 * nu_x * (ions as f64).sqrt())).powi(2)
}

/// Effective two-level coupling `ηΩ/(2√L)` of the one-phonon sideband.
pub fn sideband_coupling(omega: f64, eta: f64, ions: usize) -> f64 {
    eta * omega / (2.0 * (ions as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTiming {
    /// Axial CM angular frequency (rad/s).
    pub nu_x: f64,
    /// U-pulse duration `πy/ν_x` (s).
    pub t_u: f64,
    pub eta: f64,
    /// Rabi angular frequency for which `t_U = 2π√L/(Ωη)`.
    pub omega: f64,
    pub validity_ratio: f64,
}

impl PulseTiming {
    pub fn violates_validity(&self) -> bool {
        self.validity_ratio > VALIDITY_WARNING_THRESHOLD
    }
}

/// Full timing breakdown at the maximum allowed axial frequency.
pub fn pulse_timing(
    species: &IonSpecies,
    constants: &PhysicalConstants,
    ions: usize,
    cfg: &TrapConfig,
) -> Result<PulseTiming, PulseError> {
    let nu_x = axial_frequency_max(species, constants, ions, cfg)?;
    let t_u = PI * cfg.safety / nu_x;
    let eta = lamb_dicke(species, constants, nu_x, cfg.theta);
    if eta == 0.0 {
        return Err(PulseError::NoCoupling);
    }
    let omega = 2.0 * PI * (ions as f64).sqrt() / (t_u * eta);
    Ok(PulseTiming {
        nu_x,
        t_u,
        eta,
        omega,
        validity_ratio: validity_ratio(omega, eta, nu_x, ions),
    })
}

/// Amplitudes on the one-phonon sideband pair `{|g,1⟩, |e,0⟩}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandState {
    pub amp_g1: Complex64,
    pub amp_e0: Complex64,
}

impl SidebandState {
    /// `|g, n=1⟩`.
    pub fn ground_one_phonon() -> Self {
        Self {
            amp_g1: Complex64::new(1.0, 0.0),
            amp_e0: Complex64::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp_g1.norm_sqr() + self.amp_e0.norm_sqr()
    }
}

/// Exact evolution under the sideband Hamiltonian for time `t` at coupling
/// `g` and laser phase `phi`.
pub fn sideband_evolve(state: SidebandState, g: f64, t: f64, phi: f64) -> SidebandState {
    // For small steps cos(gt) sits within an ulp of 1 and its rounding error
    // repeats every step, draining the norm. Use 1 − cos = 2 sin²(gt/2)
    // instead, which keeps full relative precision.
    let s = (g * t).sin();
    let half = (0.5 * g * t).sin();
    let one_minus_c = 2.0 * half * half;
    let minus_i = Complex64::new(0.0, -1.0);
    let to_g = minus_i * Complex64::from_polar(s, phi);
    let to_e = minus_i * Complex64::from_polar(s, -phi);
    SidebandState {
        amp_g1: (state.amp_g1 - state.amp_g1 * one_minus_c) + to_g * state.amp_e0,
        amp_e0: (state.amp_e0 - state.amp_e0 * one_minus_c) + to_e * state.amp_g1,
    }
}
