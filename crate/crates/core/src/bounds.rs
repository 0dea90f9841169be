//! Pulse budgets and the largest number Shor's algorithm can factor.
//!
//! Two budgets cap the number of U-pulses `N_U` for `L` ions:
//!
//! * spontaneous emission, `N_U t_U < 6τ₀/L`, i.e.
//!   `N_U L^1.84 < 2.0 Zτ₀ / (y^{5/2} A^{1/2} F^{3/2} λ^{3/2})`;
//! * a lumped experimental coherence time, `N_U t_U < τ_e`, i.e.
//!   `N_U L^0.84 < 0.34 Zτ_e / (y^{5/2} A^{1/2} F^{3/2} λ^{3/2})`.
//!
//! Long multiplication needs `L = 5l + 2` ions and
//! `N_U = 544l³ + 78l² + 10l` U-pulses to factor an `l`-bit number. Both
//! sides grow with `l`, so the largest feasible `l` is found by walking up
//! from `l = 1` to the first violation. Bounds are strict inequalities.

use std::ops::RangeInclusive;

use thiserror::Error;

use crate::pulse::{self, derive_timing_constant, PRINTED_TIMING_CONSTANT};
use crate::species::{IonSpecies, PhysicalConstants, TrapConfig};

/// Upper limit of the bit walk; `N_U` still fits in a `u64` here.
pub const MAX_BITS: u64 = 300_000;

/// Coherence time implied by the slowest reported heating rate (6 phonons/s).
pub const TAU_E_HEATING: f64 = 0.17;
/// Achieved laser phase coherence time.
pub const TAU_E_LASER_PHASE: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("bit count must be between 1 and {MAX_BITS}, got {0}")]
    Bits(u64),
    #[error("ion count must be at least 2, got {0}")]
    Ions(u64),
    #[error("mode '{0}' requires an experimental coherence time")]
    MissingTauE(BoundMode),
    #[error("experimental coherence time must be non-negative and finite, got {0}")]
    TauE(f64),
    #[error("no violation found up to {MAX_BITS} bits")]
    Unbounded,
    #[error("at least one species is required")]
    NoSpecies,
    #[error("coherence-time grid must be non-empty, positive and strictly increasing")]
    Grid,
}

/// Which set of dimensional prefactors to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstantsMode {
    /// The rounded values 2.9, 2.0 and 0.34.
    #[default]
    Printed,
    /// Re-derived from the physical constants.
    Derived,
}

impl std::fmt::Display for ConstantsMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Printed => "printed",
            Self::Derived => "derived",
        })
    }
}

/// Prefactors of the timing law and of the two pulse bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prefactors {
    /// s·m^(−3/2)
    pub timing: f64,
    /// s^(−1)·m^(3/2)
    pub intrinsic: f64,
    /// s^(−1)·m^(3/2)
    pub experimental: f64,
}

impl Prefactors {
    pub const PRINTED: Self = Self {
        timing: PRINTED_TIMING_CONSTANT,
        intrinsic: 2.0,
        experimental: 0.34,
    };

    /// `k`, `6/k` and `1/k` for the first-principles timing constant `k`.
    pub fn derived(constants: &PhysicalConstants) -> Self {
        let k = derive_timing_constant(constants);
        Self {
            timing: k,
            intrinsic: 6.0 / k,
            experimental: 1.0 / k,
        }
    }

    pub fn for_mode(mode: ConstantsMode, constants: &PhysicalConstants) -> Self {
        match mode {
            ConstantsMode::Printed => Self::PRINTED,
            ConstantsMode::Derived => Self::derived(constants),
        }
    }
}

/// Ions and U-pulses needed to factor an `bits`-bit number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourcePoint {
    pub bits: u64,
    pub ions: u64,
    pub u_pulses: u64,
}

pub fn shor_resources(bits: u64) -> Result<ResourcePoint, BoundsError> {
    if !(1..=MAX_BITS).contains(&bits) {
        return Err(BoundsError::Bits(bits));
    }
    let l = bits;
    Ok(ResourcePoint {
        bits,
        ions: 5 * l + 2,
        u_pulses: 544 * l * l * l + 78 * l * l + 10 * l,
    })
}

/// Ion count `3l + 4` with measured Fourier transform and interleaved
/// measurements. No pulse count is defined for this variant.
pub fn shor_ions_interleaved(bits: u64) -> Result<u64, BoundsError> {
    if !(1..=MAX_BITS).contains(&bits) {
        return Err(BoundsError::Bits(bits));
    }
    Ok(3 * bits + 4)
}

// Z / (y^{5/2} A^{1/2} F^{3/2} λ^{3/2}) in m^(−3/2).
fn optics_factor(species: &IonSpecies, cfg: &TrapConfig) -> f64 {
    f64::from(species.z)
        / (cfg.safety.powf(2.5)
            * species.mass_number.sqrt()
            * cfg.f_number.powf(1.5)
            * species.lambda().powf(1.5))
}

/// Right-hand side of `N_U L^1.84 < …`.
pub fn intrinsic_bound_rhs(species: &IonSpecies, cfg: &TrapConfig, pf: &Prefactors) -> f64 {
    pf.intrinsic * species.tau0 * optics_factor(species, cfg)
}

/// Right-hand side of `N_U L^0.84 < …`.
pub fn experimental_bound_rhs(
    species: &IonSpecies,
    cfg: &TrapConfig,
    tau_e: f64,
    pf: &Prefactors,
) -> f64 {
    pf.experimental * tau_e * optics_factor(species, cfg)
}

fn check_ions(ions: u64) -> Result<f64, BoundsError> {
    if ions < 2 {
        Err(BoundsError::Ions(ions))
    } else {
        Ok(ions as f64)
    }
}

fn check_tau_e(tau_e: f64) -> Result<(), BoundsError> {
    if tau_e >= 0.0 && tau_e.is_finite() {
        Ok(())
    } else {
        Err(BoundsError::TauE(tau_e))
    }
}

/// Largest `N_U` allowed by spontaneous emission for `ions` ions.
pub fn intrinsic_pulse_budget(
    species: &IonSpecies,
    ions: u64,
    cfg: &TrapConfig,
    pf: &Prefactors,
) -> Result<f64, BoundsError> {
    let l = check_ions(ions)?;
    Ok(intrinsic_bound_rhs(species, cfg, pf) / l.powf(1.84))
}

/// Largest `N_U` allowed by an experimental coherence time `tau_e`.
pub fn experimental_pulse_budget(
    species: &IonSpecies,
    ions: u64,
    cfg: &TrapConfig,
    tau_e: f64,
    pf: &Prefactors,
) -> Result<f64, BoundsError> {
    let l = check_ions(ions)?;
    check_tau_e(tau_e)?;
    Ok(experimental_bound_rhs(species, cfg, tau_e, pf) / l.powf(0.84))
}

/// `6τ₀/(L t_U)` with `t_U = πy/ν_x` at the largest allowed axial frequency.
pub fn intrinsic_budget_from_coherence_time(
    species: &IonSpecies,
    constants: &PhysicalConstants,
    ions: u64,
    cfg: &TrapConfig,
) -> Result<f64, BoundsError> {
    let l = check_ions(ions)?;
    let nu = pulse::axial_frequency_max(species, constants, ions as usize, cfg)
        .map_err(|_| BoundsError::Ions(ions))?;
    let t_u = std::f64::consts::PI * cfg.safety / nu;
    Ok(6.0 * species.tau0 / (l * t_u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    Intrinsic,
    Experimental,
    /// Both bounds must hold.
    Combined,
}

impl std::fmt::Display for BoundMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Intrinsic => "intrinsic",
            Self::Experimental => "experimental",
            Self::Combined => "combined",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    Intrinsic,
    Experimental,
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Intrinsic => "intrinsic",
            Self::Experimental => "experimental",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    /// Even a 1-bit number violates the bound; `l_max` is 0.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult {
    pub species: String,
    pub mode: BoundMode,
    pub tau_e: Option<f64>,
    pub status: Feasibility,
    pub l_max: u64,
    /// Resources at `l_max`; `None` when infeasible.
    pub resources: Option<ResourcePoint>,
    /// U-pulse duration at `l_max` (s).
    pub t_u: Option<f64>,
    /// `N_U · t_U` at `l_max` (s).
    pub total_time: Option<f64>,
    /// The bound violated at `l_max + 1`.
    pub limiting: Mechanism,
}

struct BoundCheck {
    intrinsic: Option<f64>,
    experimental: Option<f64>,
}

impl BoundCheck {
    // Ratios lhs/rhs for each active bound; a bound holds when its ratio < 1.
    fn ratios(&self, point: &ResourcePoint) -> (Option<f64>, Option<f64>) {
        let n = point.u_pulses as f64;
        let l = point.ions as f64;
        (
            self.intrinsic.map(|rhs| n * l.powf(1.84) / rhs),
            self.experimental.map(|rhs| n * l.powf(0.84) / rhs),
        )
    }

    fn holds(&self, point: &ResourcePoint) -> bool {
        let (a, b) = self.ratios(point);
        a.is_none_or(|r| r < 1.0) && b.is_none_or(|r| r < 1.0)
    }

    fn binding(&self, point: &ResourcePoint) -> Mechanism {
        match self.ratios(point) {
            (Some(a), Some(b)) if b > a => Mechanism::Experimental,
            (Some(_), _) => Mechanism::Intrinsic,
            (None, _) => Mechanism::Experimental,
        }
    }
}

/// Largest bit count whose resources satisfy the selected bound(s).
pub fn max_factorable_bits(
    species: &IonSpecies,
    cfg: &TrapConfig,
    mode: BoundMode,
    tau_e: Option<f64>,
    pf: &Prefactors,
) -> Result<FeasibilityResult, BoundsError> {
    let needs_tau_e = matches!(mode, BoundMode::Experimental | BoundMode::Combined);
    if needs_tau_e && tau_e.is_none() {
        return Err(BoundsError::MissingTauE(mode));
    }
    if let Some(t) = tau_e {
        check_tau_e(t)?;
    }
    let check = BoundCheck {
        intrinsic: (mode != BoundMode::Experimental).then(|| intrinsic_bound_rhs(species, cfg, pf)),
        experimental: needs_tau_e
            .then(|| experimental_bound_rhs(species, cfg, tau_e.unwrap_or_default(), pf)),
    };

    let mut l_max = 0;
    let violated = loop {
        if l_max == MAX_BITS {
            return Err(BoundsError::Unbounded);
        }
        let next = shor_resources(l_max + 1)?;
        if !check.holds(&next) {
            break next;
        }
        l_max += 1;
    };
    let limiting = check.binding(&violated);

    if l_max == 0 {
        return Ok(FeasibilityResult {
            species: species.name.clone(),
            mode,
            tau_e,
            status: Feasibility::Infeasible,
            l_max,
            resources: None,
            t_u: None,
            total_time: None,
            limiting,
        });
    }
    let resources = shor_resources(l_max)?;
    assert!(check.holds(&resources) && !check.holds(&violated));
    let t_u = pulse::u_pulse_duration(species, resources.ions as usize, cfg, pf.timing)
        .expect("at least 7 ions");
    Ok(FeasibilityResult {
        species: species.name.clone(),
        mode,
        tau_e,
        status: Feasibility::Feasible,
        l_max,
        resources: Some(resources),
        t_u: Some(t_u),
        total_time: Some(resources.u_pulses as f64 * t_u),
        limiting,
    })
}

/// `N_U(l) · t_U(L(l))`, V-pulses excluded.
pub fn total_time(
    bits: u64,
    species: &IonSpecies,
    cfg: &TrapConfig,
    pf: &Prefactors,
) -> Result<f64, BoundsError> {
    let point = shor_resources(bits)?;
    let t_u = pulse::u_pulse_duration(species, point.ions as usize, cfg, pf.timing)
        .expect("at least 7 ions");
    Ok(point.u_pulses as f64 * t_u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub species: String,
    /// `(L, N_U^max)` pairs.
    pub points: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Data {
    pub bounds: Vec<BoundCurve>,
    /// Factorization-curve points with `L(l)` inside the ion range.
    pub factorization: Vec<ResourcePoint>,
}

/// Intrinsic bound curves over `ions` plus the factorization curve for
/// `l = 1..=max_bits`.
pub fn fig1_curves(
    species: &[&IonSpecies],
    cfg: &TrapConfig,
    pf: &Prefactors,
    ions: RangeInclusive<u64>,
    max_bits: u64,
) -> Result<Fig1Data, BoundsError> {
    if species.is_empty() {
        return Err(BoundsError::NoSpecies);
    }
    if !ions.is_empty() && *ions.start() < 2 {
        return Err(BoundsError::Ions(*ions.start()));
    }
    let bounds = species
        .iter()
        .map(|sp| {
            let points = ions
                .clone()
                .map(|l| Ok((l, intrinsic_pulse_budget(sp, l, cfg, pf)?)))
                .collect::<Result<_, BoundsError>>()?;
            Ok(BoundCurve {
                species: sp.name.clone(),
                points,
            })
        })
        .collect::<Result<_, BoundsError>>()?;
    let factorization = (1..=max_bits)
        .map(shor_resources)
        .filter(|p| p.as_ref().map_or(true, |p| ions.contains(&p.ions)))
        .collect::<Result<_, _>>()?;
    Ok(Fig1Data {
        bounds,
        factorization,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Curve {
    pub species: String,
    /// Spontaneous-emission limit the curve saturates at.
    pub intrinsic_l_max: u64,
    /// `(τ_e, l_max)` in combined mode.
    pub points: Vec<(f64, u64)>,
}

/// Combined-mode `l_max` against experimental coherence time.
pub fn fig2_curves(
    species: &[&IonSpecies],
    cfg: &TrapConfig,
    pf: &Prefactors,
    tau_e_grid: &[f64],
) -> Result<Vec<Fig2Curve>, BoundsError> {
    if species.is_empty() {
        return Err(BoundsError::NoSpecies);
    }
    let ok_grid = !tau_e_grid.is_empty()
        && tau_e_grid.iter().all(|&t| t > 0.0 && t.is_finite())
        && tau_e_grid.windows(2).all(|w| w[1] > w[0]);
    if !ok_grid {
        return Err(BoundsError::Grid);
    }
    species
        .iter()
        .map(|sp| {
            let intrinsic = max_factorable_bits(sp, cfg, BoundMode::Intrinsic, None, pf)?.l_max;
            let points = tau_e_grid
                .iter()
                .map(|&t| {
                    let r = max_factorable_bits(sp, cfg, BoundMode::Combined, Some(t), pf)?;
                    Ok((t, r.l_max))
                })
                .collect::<Result<_, BoundsError>>()?;
            Ok(Fig2Curve {
                species: sp.name.clone(),
                intrinsic_l_max: intrinsic,
                points,
            })
        })
        .collect()
}

/// `points` values spaced evenly in log between `min` and `max` inclusive.
pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let (a, b) = (min.ln(), max.ln());
            (0..points)
                .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
                .collect()
        }
    }
}
