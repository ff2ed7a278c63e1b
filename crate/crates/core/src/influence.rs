//! Exponents of the influence functional on a discretised path pair.
//!
//! `F[q₁, q₂] = exp(−real_part − i·imag_part)`, with both parts already
//! divided by ħ. The standard (Γ = 0) functional pairs `α_R` with the path
//! difference and `α_I` with the path sum; the measured bath adds the
//! late-time weighted cross terms `J = e^{−2Γ(T−t)} I`.

use serde::{Deserialize, Serialize};

use crate::convolution::{
    convolve_samples, late_time_weight, ConvolutionResult, Mode, TimeGrid, Trajectory,
};
use crate::error::{Error, Result};
use crate::kernels::{closed_form, imag_times_damping, KernelKind, MenskyDamping, OhmicBath};

#[derive(Debug, Clone, PartialEq)]
pub struct PathPair {
    pub q1: Trajectory,
    pub q2: Trajectory,
}

impl PathPair {
    pub fn new(q1: Trajectory, q2: Trajectory) -> Result<Self> {
        if !q1.grid.same_as(&q2.grid) {
            return Err(Error::domain(
                "grid mismatch: both paths must share one grid",
            ));
        }
        let finite = |t: &Trajectory| {
            t.q.iter()
                .chain(t.qdot.iter().flatten())
                .all(|x| x.is_finite())
        };
        if !finite(&q1) || !finite(&q2) {
            return Err(Error::domain("paths contain non-finite samples"));
        }
        Ok(PathPair { q1, q2 })
    }

    pub fn grid(&self) -> TimeGrid {
        self.q1.grid
    }

    pub fn swapped(&self) -> PathPair {
        PathPair {
            q1: self.q2.clone(),
            q2: self.q1.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentParts {
    /// Decoherence exponent; the off-diagonal magnitude is `exp(−real_part)`.
    pub real_part: f64,
    /// Phase exponent.
    pub imag_part: f64,
    pub hbar: f64,
}

impl ExponentParts {
    pub fn decoherence_factor(&self) -> f64 {
        (-self.real_part).exp()
    }
}

/// JSON record `{real_part, imag_part, hbar, gamma, T}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentRecord {
    pub real_part: f64,
    pub imag_part: f64,
    pub hbar: f64,
    pub gamma: f64,
    #[serde(rename = "T")]
    pub total_time: f64,
}

impl ExponentRecord {
    pub fn new(parts: &ExponentParts, gamma: f64, total_time: f64) -> Self {
        ExponentRecord {
            real_part: parts.real_part,
            imag_part: parts.imag_part,
            hbar: parts.hbar,
            gamma,
            total_time,
        }
    }
}

fn check_hbar(hbar: f64) -> Result<()> {
    if hbar > 0.0 && hbar.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "hbar must be finite and > 0, got {hbar}"
        )))
    }
}

/// `dt Σ w_n a_n b_n` with trapezoid end weights.
fn trapezoid_product(a: &[f64], b: &[f64], dt: f64) -> f64 {
    let n = a.len();
    let mut sum: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    sum -= 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]);
    dt * sum
}

fn lag_samples(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..grid.n_steps).map(|k| f(grid.time(k))).collect()
}

/// Exponent of the standard influence functional.
pub fn standard_exponent(paths: &PathPair, bath: &OhmicBath, hbar: f64) -> Result<ExponentParts> {
    check_hbar(hbar)?;
    bath.validate()?;
    let grid = paths.grid();
    let diff: Vec<f64> = paths
        .q1
        .q
        .iter()
        .zip(&paths.q2.q)
        .map(|(a, b)| a - b)
        .collect();
    let sum: Vec<f64> = paths
        .q1
        .q
        .iter()
        .zip(&paths.q2.q)
        .map(|(a, b)| a + b)
        .collect();

    let k_real = lag_samples(&grid, |t| closed_form(KernelKind::R, t, bath, 0.0));
    let k_imag = lag_samples(&grid, |t| closed_form(KernelKind::I, t, bath, 0.0));
    let i_real = convolve_samples(&k_real, &diff, grid.dt);
    let i_imag = convolve_samples(&k_imag, &sum, grid.dt);

    Ok(ExponentParts {
        real_part: trapezoid_product(&diff, &i_real, grid.dt) / hbar,
        imag_part: trapezoid_product(&diff, &i_imag, grid.dt) / hbar,
        hbar,
    })
}

/// Exponent of the influence functional with measured bath oscillators.
///
/// Uses the damped kernels `α_λ(τ) e^{−Γτ}` and assembles
///
/// ```text
/// real = ∫ [q₁ I_R,1 + q₂ I_R,2 − q₁ J_R,2 − q₂ J_R,1] / ħ
/// imag = ∫ [q₁ I_I,1 − q₂ I_I,2 + q₁ J_I,2 − q₂ J_I,1] / ħ
/// ```
///
/// At Γ = 0 this reduces to [`standard_exponent`]. For Γ > 0 the real part of
/// a diagonal pair (`q₁ ≡ q₂`) is generally non-zero because `J ≠ I`; it is
/// returned as computed.
pub fn gamma_exponent(
    paths: &PathPair,
    bath: &OhmicBath,
    damping: &MenskyDamping,
    total_time: f64,
    hbar: f64,
) -> Result<ExponentParts> {
    check_hbar(hbar)?;
    bath.validate()?;
    let grid = paths.grid();
    let gamma = damping.gamma;
    let k_real = lag_samples(&grid, |t| {
        closed_form(KernelKind::R, t, bath, 0.0) * (-gamma * t).exp()
    });
    let k_imag = lag_samples(&grid, |t| imag_times_damping(t, bath, gamma));

    let conv = |kernel: &[f64], q: &[f64]| ConvolutionResult {
        grid,
        values: convolve_samples(kernel, q, grid.dt),
        mode: Mode::Exact,
    };
    let (q1, q2) = (&paths.q1.q, &paths.q2.q);
    let ir1 = conv(&k_real, q1);
    let ir2 = conv(&k_real, q2);
    let ii1 = conv(&k_imag, q1);
    let ii2 = conv(&k_imag, q2);
    let jr1 = late_time_weight(&ir1, damping, total_time)?;
    let jr2 = late_time_weight(&ir2, damping, total_time)?;
    let ji1 = late_time_weight(&ii1, damping, total_time)?;
    let ji2 = late_time_weight(&ii2, damping, total_time)?;

    let dt = grid.dt;
    let real = trapezoid_product(q1, &ir1.values, dt) + trapezoid_product(q2, &ir2.values, dt)
        - trapezoid_product(q1, &jr2.values, dt)
        - trapezoid_product(q2, &jr1.values, dt);
    let imag = trapezoid_product(q1, &ii1.values, dt) - trapezoid_product(q2, &ii2.values, dt)
        + trapezoid_product(q1, &ji2.values, dt)
        - trapezoid_product(q2, &ji1.values, dt);

    Ok(ExponentParts {
        real_part: real / hbar,
        imag_part: imag / hbar,
        hbar,
    })
}

/// Phase of the Markov dissipative functional with `δ(0) → Ω/π`:
/// `(1/ħ) {(ηΩ/π) ∫ [q₁² − q₂²] − (η/2) ∫ [q₁ − q₂][q̇₁ + q̇₂]}`.
pub fn dissipative_phase(paths: &PathPair, bath: &OhmicBath, hbar: f64) -> Result<f64> {
    check_hbar(hbar)?;
    bath.validate()?;
    let grid = paths.grid();
    let (q1, q2) = (&paths.q1.q, &paths.q2.q);
    let (v1, v2) = (paths.q1.velocity(), paths.q2.velocity());
    let sq_diff: Vec<f64> = q1.iter().zip(q2).map(|(a, b)| a * a - b * b).collect();
    let diff: Vec<f64> = q1.iter().zip(q2).map(|(a, b)| a - b).collect();
    let vsum: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| a + b).collect();
    let ones = vec![1.0; grid.n_steps];

    let potential = bath.eta * bath.omega_cut / std::f64::consts::PI
        * trapezoid_product(&sq_diff, &ones, grid.dt);
    let friction = 0.5 * bath.eta * trapezoid_product(&diff, &vsum, grid.dt);
    Ok((potential - friction) / hbar)
}
