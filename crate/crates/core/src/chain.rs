//! Axial equilibrium of a linear ion string.
//!
//! Positions are dimensionless, in units of the length scale
//! `ℓ = (Z²e²/(4πε₀ M ν²))^(1/3)`. In those units the equilibrium condition
//! for ion `m` is
//!
//! ```text
//! u_m = Σ_{n≠m} sign(u_m − u_n) / (u_m − u_n)²
//! ```
//!
//! which is the stationarity condition of
//! `V(u) = Σ u_m²/2 + Σ_{m<n} 1/|u_m − u_n|`. `V` is strictly convex on the
//! ordered cone `u_1 < … < u_L`, so damped Newton from any ordered start
//! converges. The Hessian is `I` plus a weighted graph Laplacian whose
//! near-neighbour couplings dominate; the Newton system is solved by
//! conjugate gradients preconditioned with a banded Cholesky factor.

use std::ops::RangeInclusive;

use thiserror::Error;

use crate::species::{IonSpecies, PhysicalConstants};

/// Coefficient of the minimum-spacing power law `x_min/ℓ ≈ 2.0 / L^0.56`.
pub const FIT_COEFFICIENT: f64 = 2.0;
/// Exponent of the minimum-spacing power law.
pub const FIT_EXPONENT: f64 = 0.56;

/// Largest ion count the solver accepts.
pub const MAX_IONS: usize = 10_000;
/// A solution is accepted when its max-norm residual is at or below this.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

const TARGET_RESIDUAL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 200;
const STALL_ITERATIONS: usize = 4;
const PRECONDITIONER_BAND: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("ion count must be between 2 and {MAX_IONS}, got {0}")]
    IonCount(usize),
    #[error("equilibrium solve for {ions} ions did not converge (residual {residual:e})")]
    NotConverged { ions: usize, residual: f64 },
    #[error("fit range {min}..={max} too small: need 2 <= min and max - min >= 5")]
    FitRange { min: usize, max: usize },
    #[error("power-law fit needs at least two points with positive coordinates")]
    FitData,
    #[error("axial frequency must be positive, got {0}")]
    Frequency(f64),
}

/// Equilibrium of `ions` ions in dimensionless units.
///
/// The solver works on the gaps between neighbours, which are stored to full
/// relative precision; `positions` are rebuilt from them outward from the
/// centre. `residual` is evaluated on that gap representation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSolution {
    pub ions: usize,
    /// Strictly increasing, antisymmetric about zero.
    pub positions: Vec<f64>,
    /// `gaps[k]` separates ions `k` and `k + 1`; palindromic.
    pub gaps: Vec<f64>,
    pub min_spacing: f64,
    /// Max norm of the equilibrium equations.
    pub residual: f64,
    pub iterations: usize,
}

impl ChainSolution {
    /// Gap between the two ions nearest the centre.
    pub fn center_gap(&self) -> f64 {
        self.gaps[(self.ions - 1) / 2]
    }
}

/// Result of a least-squares power-law fit `y ≈ coefficient / x^exponent`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingFit {
    pub coefficient: f64,
    pub exponent: f64,
    pub ions_min: usize,
    pub ions_max: usize,
    pub rms_log_error: f64,
}

/// Minimum spacing from the reference power law `2.0/L^0.56`, in units of ℓ.
pub fn min_spacing_fit(ions: usize) -> f64 {
    FIT_COEFFICIENT / (ions as f64).powf(FIT_EXPONENT)
}

/// Length scale `ℓ` in metres for an axial angular frequency `nu_x` (rad/s).
pub fn length_scale(
    species: &IonSpecies,
    constants: &PhysicalConstants,
    nu_x: f64,
) -> Result<f64, ChainError> {
    if !(nu_x > 0.0 && nu_x.is_finite()) {
        return Err(ChainError::Frequency(nu_x));
    }
    let z = f64::from(species.z);
    let mass = species.mass(constants);
    Ok((z * z * constants.coulomb_e2() / (nu_x * nu_x * mass)).cbrt())
}

/// Minimum ion separation in metres, from the equilibrium solver.
pub fn min_spacing_meters(
    species: &IonSpecies,
    constants: &PhysicalConstants,
    nu_x: f64,
    ions: usize,
) -> Result<f64, ChainError> {
    let scale = length_scale(species, constants, nu_x)?;
    Ok(scale * equilibrium_positions(ions)?.min_spacing)
}

fn check_ions(ions: usize) -> Result<(), ChainError> {
    if (2..=MAX_IONS).contains(&ions) {
        Ok(())
    } else {
        Err(ChainError::IonCount(ions))
    }
}

/// Solves for the equilibrium of `ions` ions from an evenly spaced start.
///
/// Falls back to continuation from smaller chains if the cold start stalls.
pub fn equilibrium_positions(ions: usize) -> Result<ChainSolution, ChainError> {
    check_ions(ions)?;
    match newton(cold_start(ions)) {
        Ok(sol) => Ok(sol),
        Err(_) => ladder(ions),
    }
}

/// Solves every chain in `ions`, warm-starting each from its predecessor.
pub fn equilibrium_sweep(ions: RangeInclusive<usize>) -> Result<Vec<ChainSolution>, ChainError> {
    let mut out: Vec<ChainSolution> = Vec::with_capacity(ions.clone().count());
    for n in ions {
        check_ions(n)?;
        let sol = match out.last() {
            Some(prev) => newton(continuation_guess(&prev.positions, n))
                .or_else(|_| equilibrium_positions(n))?,
            None => equilibrium_positions(n)?,
        };
        out.push(sol);
    }
    Ok(out)
}

// Continuation through doubling chain sizes.
fn ladder(ions: usize) -> Result<ChainSolution, ChainError> {
    let mut sol = newton(cold_start(2))?;
    let mut n = 2;
    while n < ions {
        n = (2 * n).min(ions);
        sol = newton(continuation_guess(&sol.positions, n))?;
    }
    Ok(sol)
}

fn cold_start(ions: usize) -> Vec<f64> {
    let half_width = 1.1 * (ions as f64).powf(0.4);
    vec![2.0 * half_width / (ions - 1) as f64; ions - 1]
}

// Resample a solved chain onto `ions` sites and stretch it by the
// L^0.4 growth of the chain length.
fn continuation_guess(prev: &[f64], ions: usize) -> Vec<f64> {
    let m = prev.len();
    let stretch = (ions as f64 / m as f64).powf(0.4);
    let u: Vec<f64> = (0..ions)
        .map(|i| {
            let x = i as f64 * (m - 1) as f64 / (ions - 1) as f64;
            let k = (x.floor() as usize).min(m - 2);
            let t = x - k as f64;
            stretch * (prev[k] * (1.0 - t) + prev[k + 1] * t)
        })
        .collect();
    let mut gaps: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
    symmetrize(&mut gaps);
    gaps
}

fn symmetrize(gaps: &mut [f64]) {
    let n = gaps.len();
    for i in 0..n / 2 {
        let a = 0.5 * (gaps[i] + gaps[n - 1 - i]);
        gaps[i] = a;
        gaps[n - 1 - i] = a;
    }
}

/// Positions from palindromic gaps, built outward from the centre.
fn positions_from_gaps(gaps: &[f64]) -> Vec<f64> {
    let ions = gaps.len() + 1;
    let mut u = vec![0.0; ions];
    let mid = ions / 2;
    let mut x = if ions.is_multiple_of(2) {
        0.5 * gaps[mid - 1]
    } else {
        0.0
    };
    u[mid] = x;
    for k in mid + 1..ions {
        x += gaps[k - 1];
        u[k] = x;
    }
    for k in 0..mid {
        u[k] = -u[ions - 1 - k];
    }
    u
}

#[derive(Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

struct Evaluation {
    positions: Vec<f64>,
    potential: f64,
    gradient: Vec<f64>,
    residual: f64,
    /// Couplings `2/|u_m − u_n|³` in the strict upper triangle of a dense
    /// row-major `n × n` matrix.
    weights: Vec<f64>,
    weight_sums: Vec<f64>,
}

// Pair distances are accumulated from the gaps, so near neighbours keep
// full relative precision regardless of their distance from the centre.
fn evaluate(gaps: &[f64]) -> Evaluation {
    let positions = positions_from_gaps(gaps);
    let n = positions.len();
    let mut potential = Neumaier::default();
    let mut force = vec![Neumaier::default(); n];
    let mut weights = vec![0.0; n * n];
    let mut weight_sums = vec![0.0; n];
    for &x in &positions {
        potential.add(0.5 * x * x);
    }
    for i in 0..n {
        let row = &mut weights[i * n..(i + 1) * n];
        let mut own = force[i];
        let mut row_potential = 0.0;
        let mut row_weight = 0.0;
        let mut d = 0.0;
        for j in i + 1..n {
            d += gaps[j - 1];
            let inv = 1.0 / d;
            let inv2 = inv * inv;
            row_potential += inv;
            own.add(-inv2);
            force[j].add(inv2);
            let w = 2.0 * inv2 * inv;
            row[j] = w;
            row_weight += w;
            weight_sums[j] += w;
        }
        force[i] = own;
        weight_sums[i] += row_weight;
        potential.add(row_potential);
    }
    let gradient: Vec<f64> = positions
        .iter()
        .zip(&force)
        .map(|(&x, f)| x - f.value())
        .collect();
    let residual = gradient.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    Evaluation {
        positions,
        potential: potential.value(),
        gradient,
        residual,
        weights,
        weight_sums,
    }
}

fn newton(mut gaps: Vec<f64>) -> Result<ChainSolution, ChainError> {
    let ions = gaps.len() + 1;
    let mut current = evaluate(&gaps);
    let mut best = (current.residual, gaps.clone(), current.positions.clone());
    let mut since_best = 0;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS && best.0 >= TARGET_RESIDUAL {
        iterations += 1;
        // Inexact Newton: solve only as accurately as the current residual warrants.
        let forcing = current.residual.clamp(1e-10, 1e-3);
        let step = solve_hessian(
            &current.weights,
            &current.weight_sums,
            &current.gradient,
            forcing,
        );
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-12 {
            let mut trial: Vec<f64> = gaps
                .iter()
                .zip(step.windows(2))
                .map(|(g, p)| g - alpha * (p[1] - p[0]))
                .collect();
            symmetrize(&mut trial);
            if trial.iter().all(|&g| g > 0.0) {
                let ev = evaluate(&trial);
                let dv = ev.potential - current.potential;
                let at_floor = dv.abs() <= 1e-13 * current.potential.abs();
                if (dv < 0.0 && !at_floor) || (at_floor && ev.residual < current.residual) {
                    accepted = Some((trial, ev));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((next, ev)) = accepted else { break };
        gaps = next;
        current = ev;
        if current.residual < best.0 {
            best = (current.residual, gaps.clone(), current.positions.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STALL_ITERATIONS {
                break;
            }
        }
    }

    let (residual, gaps, positions) = best;
    if residual > RESIDUAL_TOLERANCE {
        return Err(ChainError::NotConverged { ions, residual });
    }
    let min_spacing = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ChainSolution {
        ions,
        positions,
        gaps,
        min_spacing,
        residual,
        iterations,
    })
}

// Solves (I + diag(Σw) − W) x = b by conjugate gradients, preconditioned
// with the band of W within PRECONDITIONER_BAND of the diagonal.
fn solve_hessian(weights: &[f64], weight_sums: &[f64], b: &[f64], rel_tol: f64) -> Vec<f64> {
    let n = b.len();
    let apply = |x: &[f64], out: &mut [f64]| {
        for (o, (s, xi)) in out.iter_mut().zip(weight_sums.iter().zip(x)) {
            *o = (1.0 + s) * xi;
        }
        for (i, row) in weights.chunks_exact(n).enumerate() {
            let xi = x[i];
            let mut coupled = 0.0;
            for ((w, xj), oj) in row[i + 1..].iter().zip(&x[i + 1..]).zip(&mut out[i + 1..]) {
                coupled += w * xj;
                *oj -= w * xi;
            }
            out[i] -= coupled;
        }
    };
    let diag: Vec<f64> = weight_sums.iter().map(|s| 1.0 + s).collect();
    let precond = BandCholesky::factor(&diag, weights, PRECONDITIONER_BAND.min(n - 1));

    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return x;
    }
    let mut r = b.to_vec();
    let mut z = precond.solve(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut hp = vec![0.0; n];
    for _ in 0..n.max(50) {
        apply(&p, &mut hp);
        let alpha = rz / dot(&p, &hp);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * hp[i];
        }
        if norm(&r) <= rel_tol * b_norm {
            break;
        }
        z = precond.solve(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

/// Cholesky factor of a symmetric banded matrix, stored row-wise as
/// `lower[i * (band + 1) + (i - j)]` for `i - band <= j <= i`.
struct BandCholesky {
    n: usize,
    band: usize,
    lower: Vec<f64>,
}

impl BandCholesky {
    /// Factors `diag(diag) − W` restricted to `|i − j| <= band`, reading `W`
    /// from its upper triangle.
    fn factor(diag: &[f64], weights: &[f64], band: usize) -> Self {
        let n = diag.len();
        let width = band + 1;
        let mut lower = vec![0.0; n * width];
        for i in 0..n {
            let lo = i.saturating_sub(band);
            for j in lo..=i {
                let mut sum = if i == j { diag[i] } else { -weights[j * n + i] };
                for k in lo.max(j.saturating_sub(band))..j {
                    sum -= lower[i * width + (i - k)] * lower[j * width + (j - k)];
                }
                lower[i * width + (i - j)] = if i == j {
                    sum.sqrt()
                } else {
                    sum / lower[j * width]
                };
            }
        }
        Self { n, band, lower }
    }

    #[allow(clippy::needless_range_loop)]
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, band, width) = (self.n, self.band, self.band + 1);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut sum = y[i];
            for k in i.saturating_sub(band)..i {
                sum -= self.lower[i * width + (i - k)] * y[k];
            }
            y[i] = sum / self.lower[i * width];
        }
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in i + 1..(i + width).min(n) {
                sum -= self.lower[k * width + (k - i)] * y[k];
            }
            y[i] = sum / self.lower[i * width];
        }
        y
    }
}

/// Ordinary least squares of `ln y` against `ln x`; returns
/// `(coefficient, exponent, rms_log_error)` for `y ≈ coefficient / x^exponent`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<(f64, f64, f64), ChainError> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(ChainError::FitData);
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(ChainError::FitData);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rms = (logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((intercept.exp(), -slope, rms))
}

/// Fits `min_spacing ≈ coefficient / L^exponent` over `ions_min..=ions_max`.
pub fn fit_min_spacing(ions_min: usize, ions_max: usize) -> Result<SpacingFit, ChainError> {
    if ions_min < 2 || ions_max < ions_min + 5 {
        return Err(ChainError::FitRange {
            min: ions_min,
            max: ions_max,
        });
    }
    let points: Vec<(f64, f64)> = equilibrium_sweep(ions_min..=ions_max)?
        .iter()
        .map(|s| (s.ions as f64, s.min_spacing))
        .collect();
    let (coefficient, exponent, rms_log_error) = fit_power_law(&points)?;
    Ok(SpacingFit {
        coefficient,
        exponent,
        ions_min,
        ions_max,
        rms_log_error,
    })
}
