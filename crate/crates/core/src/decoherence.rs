//! Spontaneous-emission survival of a Ramsey-type pseudo-computation.
//!
//! `2L/3` ions are rotated into `(|g⟩+|e⟩)/√2`, left for a time `T` while the
//! upper level decays with lifetime `τ₀`, then rotated back by `−π/2`. The
//! run is correct when every ion ends in `|g⟩`. For one ion, amplitude
//! damping leaves the coherence at `e^{−T/2τ₀}/2`, so after the return pulse
//!
//! ```text
//! P_ion(g) = (1 + e^{−T/2τ₀}) / 2
//! ```
//!
//! and the whole register survives with `P_ion^{2L/3}`. Expanding to first
//! order gives `1 − LT/6τ₀`, an effective coherence time of `6τ₀/L`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Above this value of `LT/6τ₀` the linear form is flagged as out of regime.
pub const LINEAR_REGIME_LIMIT: f64 = 0.1;

/// Trajectories per independently seeded stream.
pub const BATCH_SIZE: u64 = 1 << 16;

#[derive(Debug, Error, PartialEq)]
pub enum DecoherenceError {
    #[error("ion count must be at least 1")]
    NoIons,
    #[error("wait time must be non-negative and finite, got {0}")]
    WaitTime(f64),
    #[error("lifetime must be positive, got {0}")]
    Lifetime(f64),
    #[error("trajectory count must be at least 1")]
    NoTrajectories,
}

fn check(ions: usize, t: f64, tau0: f64) -> Result<(), DecoherenceError> {
    if ions < 1 {
        return Err(DecoherenceError::NoIons);
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(DecoherenceError::WaitTime(t));
    }
    if !(tau0 > 0.0 && tau0.is_finite()) {
        return Err(DecoherenceError::Lifetime(tau0));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSurvival {
    /// `max(0, 1 − LT/6τ₀)`.
    pub probability: f64,
    /// The unclamped value was negative.
    pub clamped: bool,
    /// `LT/6τ₀` exceeds [`LINEAR_REGIME_LIMIT`].
    pub out_of_regime: bool,
}

pub fn survival_linear(ions: usize, t: f64, tau0: f64) -> Result<LinearSurvival, DecoherenceError> {
    check(ions, t, tau0)?;
    let loss = ions as f64 * t / (6.0 * tau0);
    Ok(LinearSurvival {
        probability: (1.0 - loss).max(0.0),
        clamped: loss > 1.0,
        out_of_regime: loss > LINEAR_REGIME_LIMIT,
    })
}

/// Ground-state probability of one ion after the full sequence.
pub fn per_ion_survival(t: f64, tau0: f64) -> f64 {
    0.5 * (1.0 + (-t / (2.0 * tau0)).exp())
}

/// Survival with a real-valued number of participating ions.
pub fn survival_for_excited(excited_ions: f64, t: f64, tau0: f64) -> f64 {
    per_ion_survival(t, tau0).powf(excited_ions)
}

/// `[(1 + e^{−T/2τ₀})/2]^{2L/3}`.
pub fn survival_exact(ions: usize, t: f64, tau0: f64) -> Result<f64, DecoherenceError> {
    check(ions, t, tau0)?;
    Ok(survival_for_excited(2.0 * ions as f64 / 3.0, t, tau0))
}

/// `6τ₀/L`.
pub fn effective_coherence_time(ions: usize, tau0: f64) -> f64 {
    6.0 * tau0 / ions as f64
}

/// Wait time at which the linear form drops to `1 − eps`.
pub fn linear_time_for_loss(ions: usize, tau0: f64, eps: f64) -> f64 {
    eps * effective_coherence_time(ions, tau0)
}

/// Whole ions simulated for `L` ions: `⌈2L/3⌉`.
pub fn simulated_ion_count(ions: usize) -> usize {
    (2 * ions).div_ceil(3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    /// Binomial standard error `√(p(1−p)/n)`.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalEstimate {
    pub ions: usize,
    pub simulated_ions: usize,
    pub p_exact: f64,
    /// Closed form at the integer exponent used by the simulation.
    pub p_exact_simulated: f64,
    pub p_linear: LinearSurvival,
    pub p_monte_carlo: Option<MonteCarloEstimate>,
    pub trajectories: u64,
    pub seed: u64,
}

// Per-ion branch probabilities for one quantum trajectory.
#[derive(Debug, Clone, Copy)]
struct IonBranches {
    jump: f64,
    ground_after_jump: f64,
    ground_without_jump: f64,
}

impl IonBranches {
    fn new(t: f64, tau0: f64) -> Self {
        let decay = (-t / tau0).exp();
        // (|g⟩+|e⟩)/√2: a jump happens with probability |c_e|²(1 − e^{−T/τ₀}).
        let jump = 0.5 * (1.0 - decay);
        // The −π/2 pulse maps (a_g, a_e) to a_g' = (a_g + a_e)/√2.
        let rotate = |a_g: f64, a_e: f64| {
            let amp = (a_g + a_e) / std::f64::consts::SQRT_2;
            amp * amp
        };
        let norm = (1.0 + decay).sqrt();
        Self {
            jump,
            ground_after_jump: rotate(1.0, 0.0),
            ground_without_jump: rotate(1.0 / norm, decay.sqrt() / norm),
        }
    }

    fn survives<R: Rng>(&self, rng: &mut R) -> bool {
        let p_ground = if rng.random::<f64>() < self.jump {
            self.ground_after_jump
        } else {
            self.ground_without_jump
        };
        rng.random::<f64>() < p_ground
    }
}

fn run_batch(branches: IonBranches, ions: usize, seed: u64, batch: u64, count: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    (0..count)
        .filter(|_| (0..ions).all(|_| branches.survives(&mut rng)))
        .count() as u64
}

/// Monte Carlo quantum-trajectory estimate of the survival probability.
///
/// Trajectories are split into batches of [`BATCH_SIZE`], batch `b` drawing
/// from ChaCha8 stream `b` of `seed`, so the result does not depend on how
/// many threads run.
pub fn simulate_trajectories(
    ions: usize,
    t: f64,
    tau0: f64,
    trajectories: u64,
    seed: u64,
) -> Result<SurvivalEstimate, DecoherenceError> {
    check(ions, t, tau0)?;
    if trajectories == 0 {
        return Err(DecoherenceError::NoTrajectories);
    }
    let simulated = simulated_ion_count(ions);
    let branches = IonBranches::new(t, tau0);
    let batches = trajectories.div_ceil(BATCH_SIZE);
    let successes: u64 = (0..batches)
        .into_par_iter()
        .map(|b| {
            let count = BATCH_SIZE.min(trajectories - b * BATCH_SIZE);
            run_batch(branches, simulated, seed, b, count)
        })
        .sum();
    let mean = successes as f64 / trajectories as f64;
    let std_error = (mean * (1.0 - mean) / trajectories as f64).sqrt();
    Ok(SurvivalEstimate {
        ions,
        simulated_ions: simulated,
        p_exact: survival_exact(ions, t, tau0)?,
        p_exact_simulated: survival_for_excited(simulated as f64, t, tau0),
        p_linear: survival_linear(ions, t, tau0)?,
        p_monte_carlo: Some(MonteCarloEstimate { mean, std_error }),
        trajectories,
        seed,
    })
}
