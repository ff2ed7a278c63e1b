//! Volterra convolutions `I(t) = ∫₀^t K(t − t′) f(t′) dt′` on a uniform grid
//! and their Markov replacements `f(t) ∫₀^∞ K`.
//!
//! All exact convolutions use the trapezoid rule on the grid itself, so the
//! discrete operator is linear in `f` and second order in `dt`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fastconv::linear_convolution;
use crate::kernels::{
    damped_sinc, markov_dissipation_coefficients, KernelEval, MenskyDamping, OhmicBath,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    /// Number of samples; the grid covers `t = 0, dt, ..., (n_steps - 1) dt`.
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::domain(format!(
                "grid step must be finite and > 0, got {dt}"
            )));
        }
        if n_steps < 2 {
            return Err(Error::domain(format!(
                "grid needs at least 2 samples, got {n_steps}"
            )));
        }
        Ok(TimeGrid { dt, n_steps })
    }

    /// Grid with step `dt` reaching at least `t_max`.
    pub fn covering(dt: f64, t_max: f64) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::domain(format!(
                "t_max must be finite and > 0, got {t_max}"
            )));
        }
        let n = (t_max / dt - 1e-9).ceil();
        if !(n < 1e9) {
            return Err(Error::domain("grid would exceed 1e9 samples"));
        }
        Self::new(dt, n as usize + 1)
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_steps).map(|n| self.time(n)).collect()
    }

    pub fn t_final(&self) -> f64 {
        self.time(self.n_steps - 1)
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.n_steps == other.n_steps && (self.dt - other.dt).abs() <= 1e-12 * self.dt
    }

    /// Grid with half the step over the same span.
    pub fn refined(&self) -> TimeGrid {
        TimeGrid {
            dt: 0.5 * self.dt,
            n_steps: 2 * self.n_steps - 1,
        }
    }
}

/// Sampled path `q(t)` with an optional velocity record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub q: Vec<f64>,
    pub qdot: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, q: Vec<f64>) -> Result<Self> {
        check_len("q", &q, &grid)?;
        Ok(Trajectory {
            grid,
            q,
            qdot: None,
        })
    }

    pub fn with_velocity(grid: TimeGrid, q: Vec<f64>, qdot: Vec<f64>) -> Result<Self> {
        check_len("q", &q, &grid)?;
        check_len("qdot", &qdot, &grid)?;
        Ok(Trajectory {
            grid,
            q,
            qdot: Some(qdot),
        })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let q = grid.times().into_iter().map(f).collect();
        Trajectory {
            grid,
            q,
            qdot: None,
        }
    }

    pub fn from_fn_with_velocity(
        grid: TimeGrid,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
    ) -> Self {
        let times = grid.times();
        let q = times.iter().map(|&t| f(t)).collect();
        let qdot = times.iter().map(|&t| df(t)).collect();
        Trajectory {
            grid,
            q,
            qdot: Some(qdot),
        }
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Trajectory {
            grid,
            q: vec![0.0; grid.n_steps],
            qdot: Some(vec![0.0; grid.n_steps]),
        }
    }

    /// Recorded velocity, or second-order finite differences of `q`
    /// (central inside, one-sided three-point stencils at both ends).
    pub fn velocity(&self) -> Vec<f64> {
        if let Some(v) = &self.qdot {
            return v.clone();
        }
        let q = &self.q;
        let n = q.len();
        let h = self.grid.dt;
        let mut v = vec![0.0; n];
        if n == 2 {
            let d = (q[1] - q[0]) / h;
            return vec![d, d];
        }
        v[0] = (-3.0 * q[0] + 4.0 * q[1] - q[2]) / (2.0 * h);
        for i in 1..n - 1 {
            v[i] = (q[i + 1] - q[i - 1]) / (2.0 * h);
        }
        v[n - 1] = (3.0 * q[n - 1] - 4.0 * q[n - 2] + q[n - 3]) / (2.0 * h);
        v
    }

    fn check_finite(&self) -> Result<()> {
        if self.q.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("trajectory contains non-finite samples"));
        }
        if let Some(v) = &self.qdot {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::domain(
                    "trajectory velocity contains non-finite samples",
                ));
            }
        }
        Ok(())
    }
}

fn check_len(name: &str, values: &[f64], grid: &TimeGrid) -> Result<()> {
    if values.len() != grid.n_steps {
        return Err(Error::domain(format!(
            "{name} has {} samples but the grid has {}",
            values.len(),
            grid.n_steps
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Markov,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Markov => "markov",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionResult {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub mode: Mode,
}

/// Trapezoid-rule convolution of kernel lag samples `kernel[k] = K(k dt)`
/// with `f`: `I[0] = 0` and
/// `I[n] = dt (½K[n] f[0] + Σ_{0<j<n} K[n−j] f[j] + ½K[0] f[n])`.
pub fn convolve_samples(kernel: &[f64], f: &[f64], dt: f64) -> Vec<f64> {
    let n = f.len();
    assert!(kernel.len() >= n, "kernel has fewer lags than the signal");
    if n == 0 {
        return Vec::new();
    }
    let full = linear_convolution(&kernel[..n], f);
    (0..n)
        .map(|i| {
            if i == 0 {
                0.0
            } else {
                dt * (full[i] - 0.5 * kernel[i] * f[0] - 0.5 * kernel[0] * f[i])
            }
        })
        .collect()
}

/// Exact (trapezoid) convolution of a sampled kernel with `f.q`.
///
/// The kernel must be sampled at the lags `0, dt, 2dt, ...` of `f.grid`
/// (see [`KernelEval::on_lags`]) and cover at least the grid length.
pub fn volterra_convolve(kernel: &KernelEval, f: &Trajectory) -> Result<ConvolutionResult> {
    let grid = f.grid;
    if kernel.len() < grid.n_steps {
        return Err(Error::domain(format!(
            "grid mismatch: kernel has {} lags, trajectory has {} samples",
            kernel.len(),
            grid.n_steps
        )));
    }
    let misaligned = kernel
        .taus
        .iter()
        .take(grid.n_steps)
        .enumerate()
        .any(|(k, &tau)| (tau - grid.time(k)).abs() > 1e-9 * grid.dt.max(grid.time(k)));
    if misaligned {
        return Err(Error::domain(
            "grid mismatch: kernel lags are not the grid lags 0, dt, 2dt, ...",
        ));
    }
    f.check_finite()?;
    Ok(ConvolutionResult {
        grid,
        values: convolve_samples(&kernel.values, &f.q, grid.dt),
        mode: Mode::Exact,
    })
}

/// Markov approximation `I(t) ≈ f(t) · weight`.
pub fn markov_convolve(f: &Trajectory, weight: f64) -> ConvolutionResult {
    ConvolutionResult {
        grid: f.grid,
        values: f.q.iter().map(|&x| x * weight).collect(),
        mode: Mode::Markov,
    }
}

/// The dissipative convolution `∫₀^t α_I^Γ(t − t′)[q₁ + q₂](t′) dt′`.
///
/// `Exact` integrates by parts, keeping the boundary term at both limits:
///
/// ```text
/// (η/π) { −Ω Σq(t) + s(t) Σq(0) + ∫₀^t s(τ) Σq̇(t − τ) dτ },  s(τ) = (sin Ωτ/τ) e^{−Γτ}
/// ```
///
/// `Markov` replaces the last integral by `Σq̇(t) ∫₀^∞ s`, which gives
/// `−(ηΩ/π) Σq + (η/π) arctan(Ω/Γ) Σq̇`.
pub fn dissipative_pair_convolution(
    q1: &Trajectory,
    q2: &Trajectory,
    bath: &OhmicBath,
    damping: &MenskyDamping,
    mode: Mode,
) -> Result<ConvolutionResult> {
    if !q1.grid.same_as(&q2.grid) {
        return Err(Error::domain("grid mismatch between q1 and q2"));
    }
    bath.validate()?;
    q1.check_finite()?;
    q2.check_finite()?;
    let grid = q1.grid;
    let sum_q: Vec<f64> = q1.q.iter().zip(&q2.q).map(|(a, b)| a + b).collect();
    let sum_v: Vec<f64> = q1
        .velocity()
        .iter()
        .zip(q2.velocity())
        .map(|(a, b)| a + b)
        .collect();

    let values = match mode {
        Mode::Markov => {
            let c = markov_dissipation_coefficients(bath, damping);
            sum_q
                .iter()
                .zip(&sum_v)
                .map(|(q, v)| c.position * q + c.velocity * v)
                .collect()
        }
        Mode::Exact => {
            let omega = bath.omega_cut;
            let s: Vec<f64> = (0..grid.n_steps)
                .map(|k| damped_sinc(omega, damping.gamma, grid.time(k)))
                .collect();
            let memory = convolve_samples(&s, &sum_v, grid.dt);
            let scale = bath.eta / PI;
            (0..grid.n_steps)
                .map(|n| scale * (-omega * sum_q[n] + s[n] * sum_q[0] + memory[n]))
                .collect()
        }
    };
    Ok(ConvolutionResult { grid, values, mode })
}

/// `J(t) = e^{−2Γ(T − t)} I(t)`.
pub fn late_time_weight(
    i: &ConvolutionResult,
    damping: &MenskyDamping,
    total_time: f64,
) -> Result<ConvolutionResult> {
    let t_last = i.grid.t_final();
    if !(total_time >= t_last * (1.0 - 1e-12)) || !total_time.is_finite() {
        return Err(Error::domain(format!(
            "total time {total_time} precedes the last grid time {t_last}"
        )));
    }
    let values = i
        .values
        .iter()
        .enumerate()
        .map(|(n, &v)| {
            let lag = (total_time - i.grid.time(n)).max(0.0);
            (-2.0 * damping.gamma * lag).exp() * v
        })
        .collect();
    Ok(ConvolutionResult {
        grid: i.grid,
        values,
        mode: i.mode,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// `max |exact − approx| / max |exact|` over `t ≥ transient_cut`.
    pub sup_rel: f64,
    /// `‖exact − approx‖₂ / ‖exact‖₂` over the same window.
    pub l2_rel: f64,
    /// `max |exact − approx|` over the last tenth of the window.
    pub tail_mag: f64,
    pub transient_cut: f64,
}

/// Transient cut used by default: `5/Γ`, or `5/Ω` without damping.
pub fn default_transient_cut(bath: &OhmicBath, damping: &MenskyDamping) -> f64 {
    if damping.gamma > 0.0 {
        5.0 / damping.gamma
    } else {
        5.0 / bath.omega_cut
    }
}

pub fn convolution_error_report(
    exact: &ConvolutionResult,
    approx: &ConvolutionResult,
    transient_cut: f64,
) -> Result<ErrorReport> {
    if !exact.grid.same_as(&approx.grid) {
        return Err(Error::domain("error report needs identical grids"));
    }
    if !(transient_cut >= 0.0) {
        return Err(Error::domain(format!(
            "transient cut must be >= 0, got {transient_cut}"
        )));
    }
    let grid = exact.grid;
    let start = (0..grid.n_steps).find(|&n| grid.time(n) >= transient_cut * (1.0 - 1e-12));
    let start = start.ok_or_else(|| {
        Error::domain(format!(
            "no samples after the transient cut {transient_cut} (grid ends at {})",
            grid.t_final()
        ))
    })?;

    let e = &exact.values[start..];
    let a = &approx.values[start..];
    let mut sup_diff: f64 = 0.0;
    let mut sup_exact: f64 = 0.0;
    let mut sq_diff = 0.0;
    let mut sq_exact = 0.0;
    for (x, y) in e.iter().zip(a) {
        let d = (x - y).abs();
        sup_diff = sup_diff.max(d);
        sup_exact = sup_exact.max(x.abs());
        sq_diff += d * d;
        sq_exact += x * x;
    }
    let tail_start = e.len() - (e.len() / 10).max(1);
    let tail_mag = e[tail_start..]
        .iter()
        .zip(&a[tail_start..])
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);

    Ok(ErrorReport {
        sup_rel: ratio(sup_diff, sup_exact),
        l2_rel: ratio(sq_diff.sqrt(), sq_exact.sqrt()),
        tail_mag,
        transient_cut,
    })
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}
