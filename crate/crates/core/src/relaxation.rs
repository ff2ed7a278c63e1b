//! Classical oscillator with memory friction
//!
//! ```text
//! m₀ q̈ + m₀ ω₀² q + ∫₀^t γ(t − t′) q̇(t′) dt′ = 0,   γ(τ) = (2η/π)(sin Ωτ/τ) e^{−Γτ}
//! ```
//!
//! The friction kernel has the shape of the damped dissipative kernel and its
//! total weight `∫₀^∞ γ = (2η/π) arctan(Ω/Γ)` is the coefficient the Markov
//! approximation assigns to `q̇`. With a finite cutoff and Γ = 0 the decay is
//! exponential only at intermediate times; [`analyze_decay`] fits the
//! exponential part of the envelope and measures what is left after it.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::convolution::{TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::fastconv::causal_online;
use crate::kernels::{damped_sinc, MenskyDamping, OhmicBath};

/// Largest admissible step as a fraction of `min(2π/ω₀, 1/Ω)`.
pub const MAX_STEP_FRACTION: f64 = 0.02;

/// Default tail threshold, in multiples of the fit-window RMS residual.
pub const DEFAULT_RMS_MULTIPLE: f64 = 10.0;

/// Lower bound on the RMS residual entering the default threshold; keeps
/// noise-free synthetic envelopes from turning roundoff into "tails". On
/// coarse grids the floor is raised to `(ω dt)³`, the size of the parabolic
/// peak-refinement error.
pub const RESIDUAL_FLOOR: f64 = 1e-9;

/// Depth, relative to the first envelope peak, to which the exponential fit
/// is followed when measuring the tail.
pub const ENVELOPE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSpec {
    pub mass_0: f64,
    pub omega_0: f64,
}

impl OscillatorSpec {
    pub fn new(mass_0: f64, omega_0: f64) -> Result<Self> {
        for (name, v) in [("mass_0", mass_0), ("omega_0", omega_0)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(OscillatorSpec { mass_0, omega_0 })
    }

    pub fn energy(&self, q: f64, v: f64) -> f64 {
        0.5 * self.mass_0 * (v * v + self.omega_0 * self.omega_0 * q * q)
    }
}

/// `γ(τ) = (2η/π)(sin Ωτ/τ) e^{−Γτ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionKernel {
    pub eta: f64,
    pub omega_cut: f64,
    pub gamma: f64,
}

impl FrictionKernel {
    pub fn new(bath: &OhmicBath, damping: &MenskyDamping) -> Result<Self> {
        if bath.eta < 0.0 {
            return Err(Error::domain("friction strength must be >= 0"));
        }
        Ok(FrictionKernel {
            eta: bath.eta,
            omega_cut: bath.omega_cut,
            gamma: damping.gamma,
        })
    }

    /// Kernel with zero strength (free oscillator).
    pub fn frictionless(omega_cut: f64) -> Self {
        FrictionKernel {
            eta: 0.0,
            omega_cut,
            gamma: 0.0,
        }
    }

    pub fn value(&self, tau: f64) -> f64 {
        2.0 * self.eta / PI * damped_sinc(self.omega_cut, self.gamma, tau)
    }

    /// `∫₀^∞ γ = (2η/π) arctan(Ω/Γ)`, equal to η at Γ = 0.
    pub fn markov_total(&self) -> f64 {
        if self.gamma == 0.0 {
            self.eta
        } else {
            2.0 * self.eta / PI * (self.omega_cut / self.gamma).atan()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    Memory,
    Markov,
}

impl std::str::FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "memory" => Ok(SimMode::Memory),
            "markov" => Ok(SimMode::Markov),
            other => Err(Error::domain(format!("unknown simulation mode '{other}'"))),
        }
    }
}

/// Largest step accepted by the memory integrator.
pub fn max_step(osc: &OscillatorSpec, kernel: &FrictionKernel) -> f64 {
    MAX_STEP_FRACTION * (2.0 * PI / osc.omega_0).min(1.0 / kernel.omega_cut)
}

pub fn simulate(
    mode: SimMode,
    osc: &OscillatorSpec,
    kernel: &FrictionKernel,
    grid: TimeGrid,
    q0: f64,
    v0: f64,
) -> Result<Trajectory> {
    if !q0.is_finite() || !v0.is_finite() {
        return Err(Error::domain("initial conditions must be finite"));
    }
    match mode {
        SimMode::Markov => Ok(markov_solution(osc, kernel.markov_total(), grid, q0, v0)),
        SimMode::Memory => {
            let limit = max_step(osc, kernel);
            if grid.dt > limit * (1.0 + 1e-9) {
                return Err(Error::domain(format!(
                    "step {} exceeds the memory-integrator limit {limit} = 0.02 min(2π/ω₀, 1/Ω)",
                    grid.dt
                )));
            }
            memory_solution(osc, kernel, grid, q0, v0)
        }
    }
}

/// Implicit trapezoid step for `(q, v)` with the trapezoid history sum of the
/// friction integral. The only implicit piece, `½ dt γ(0) v_{n+1}`, is linear,
/// so the corrector is solved exactly instead of iterated; with η = 0 the
/// step conserves the oscillator energy to roundoff.
fn memory_solution(
    osc: &OscillatorSpec,
    kernel: &FrictionKernel,
    grid: TimeGrid,
    q0: f64,
    v0: f64,
) -> Result<Trajectory> {
    let n = grid.n_steps;
    let h = grid.dt;
    let m = osc.mass_0;
    let w2 = osc.omega_0 * osc.omega_0;
    let g0 = kernel.value(0.0);
    let weighted: Vec<f64> = (0..n).map(|k| h * kernel.value(grid.time(k))).collect();

    let mut q = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut accel = 0.0;
    let c = 0.5 * h * g0 / m;
    let denom = 1.0 + 0.25 * h * h * w2 + 0.5 * h * c;

    causal_online(&weighted, n, |i, history| {
        if i == 0 {
            q[0] = q0;
            v[0] = v0;
            accel = -w2 * q0;
            return 0.5 * v0;
        }
        let (qp, vp) = (q[i - 1], v[i - 1]);
        let explicit = -w2 * (qp + 0.5 * h * vp) - history / m;
        let vn = (vp + 0.5 * h * accel + 0.5 * h * explicit) / denom;
        let qn = qp + 0.5 * h * (vp + vn);
        accel = -w2 * qn - (history + 0.5 * h * g0 * vn) / m;
        q[i] = qn;
        v[i] = vn;
        vn
    });

    let e0 = osc.energy(q0, v0);
    let scale = e0.max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for (i, (&qi, &vi)) in q.iter().zip(&v).enumerate() {
        if !qi.is_finite() || !vi.is_finite() {
            return Err(Error::numeric(
                format!("non-finite state at step {i}"),
                f64::INFINITY,
            ));
        }
        worst = worst.max((osc.energy(qi, vi) - e0) / scale);
    }
    if worst > 1e-6 {
        return Err(Error::numeric(
            "oscillator energy grew: unstable step",
            worst,
        ));
    }
    Trajectory::with_velocity(grid, q, v)
}

/// Closed-form solution of `m₀q̈ + m₀ω₀²q + η_tot q̇ = 0`.
fn markov_solution(
    osc: &OscillatorSpec,
    eta_total: f64,
    grid: TimeGrid,
    q0: f64,
    v0: f64,
) -> Trajectory {
    let lambda = eta_total / (2.0 * osc.mass_0);
    let w0 = osc.omega_0;
    let disc = w0 * w0 - lambda * lambda;
    let times = grid.times();
    let (q, v): (Vec<f64>, Vec<f64>) = if disc > 0.0 {
        let wd = disc.sqrt();
        let b = (v0 + lambda * q0) / wd;
        times
            .iter()
            .map(|&t| {
                let (s, c) = (wd * t).sin_cos();
                let e = (-lambda * t).exp();
                let q = e * (q0 * c + b * s);
                let v = e * ((b * wd - lambda * q0) * c - (q0 * wd + lambda * b) * s);
                (q, v)
            })
            .unzip()
    } else if disc == 0.0 {
        let b = v0 + lambda * q0;
        times
            .iter()
            .map(|&t| {
                let e = (-lambda * t).exp();
                (e * (q0 + b * t), e * (b - lambda * (q0 + b * t)))
            })
            .unzip()
    } else {
        let r = (-disc).sqrt();
        let (s1, s2) = (-lambda + r, -lambda - r);
        let a = (v0 - s2 * q0) / (s1 - s2);
        let b = q0 - a;
        times
            .iter()
            .map(|&t| {
                let (e1, e2) = ((s1 * t).exp(), (s2 * t).exp());
                (a * e1 + b * e2, a * s1 * e1 + b * s2 * e2)
            })
            .unzip()
    };
    Trajectory {
        grid,
        q,
        qdot: Some(v),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Exponential,
    Tailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailThreshold {
    /// Multiple of the fit-window RMS residual (floored at [`RESIDUAL_FLOOR`]
    /// and at the peak-refinement error of the grid).
    RmsMultiple(f64),
    /// Fixed log-envelope residual.
    Absolute(f64),
}

impl Default for TailThreshold {
    fn default() -> Self {
        TailThreshold::RmsMultiple(DEFAULT_RMS_MULTIPLE)
    }
}

/// An envelope sample: a local maximum of `|q|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub t: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayAnalysis {
    /// Exponential decay rate of the envelope over the fit window.
    pub fitted_rate: f64,
    pub fit_window: (f64, f64),
    /// Largest `|ln envelope − ln fit|` after the fit window, down to
    /// [`ENVELOPE_FLOOR`] of the first peak.
    pub tail_residual: f64,
    pub classification: Classification,
    /// RMS of the log residuals inside the fit window.
    pub fit_rms: f64,
    pub threshold: f64,
    pub peaks_in_fit: usize,
    pub peaks_after_fit: usize,
}

/// Envelope samples of `|q|`.
///
/// Local maxima of `|q|` that are also the largest value within a quarter of
/// the dominant period on either side give the oscillation peaks; wiggles
/// riding on the main oscillation are not counted. The half-period is then
/// taken from the spacing of the first peaks and the envelope is sampled
/// once per half-period as the largest `|q|` in a window around each
/// expected peak. Interior maxima are refined with a parabola through the
/// three samples around them. The windowed sampling keeps following the
/// envelope when a late, non-oscillating tail takes over and `|q|` no
/// longer has local maxima.
pub fn envelope_peaks(traj: &Trajectory) -> Result<Vec<Peak>> {
    let q = &traj.q;
    let n = q.len();
    if n < 5 {
        return Err(Error::domain(
            "trajectory too short for envelope extraction",
        ));
    }
    let half_period = dominant_half_period(q)
        .ok_or_else(|| Error::domain("fewer than 4 envelope peaks: signal does not oscillate"))?;
    let reach = (half_period / 2).max(1);
    let abs: Vec<f64> = q.iter().map(|x| x.abs()).collect();
    let window_max = sliding_max(&abs, reach);

    let local: Vec<usize> = (1..n - 1)
        .filter(|&i| {
            abs[i] >= abs[i - 1] && abs[i] > abs[i + 1] && abs[i] >= window_max[i] && abs[i] > 0.0
        })
        .take(PERIOD_PEAKS)
        .collect();
    if local.len() < 4 {
        return Err(Error::domain(format!(
            "fewer than 4 envelope peaks ({})",
            local.len()
        )));
    }
    // Half-period in samples, from the refined positions of the first peaks.
    let first = refine(&abs, local[0]).0;
    let last = refine(&abs, local[local.len() - 1]).0;
    let spacing = (last - first) / (local.len() - 1) as f64;
    let half_window = 0.5 * spacing;

    let dt = traj.grid.dt;
    let mut peaks = Vec::new();
    for k in 0.. {
        let centre = first + k as f64 * spacing;
        let lo = (centre - half_window).ceil().max(0.0) as usize;
        let hi = (centre + half_window).floor() as usize;
        if hi >= n {
            break;
        }
        let best = (lo..=hi).fold(lo, |b, i| if abs[i] > abs[b] { i } else { b });
        let (position, amplitude) = if best > lo && best < hi && best + 1 < n {
            refine(&abs, best)
        } else {
            (best as f64, abs[best])
        };
        if amplitude > 0.0 {
            peaks.push(Peak {
                t: position * dt,
                amplitude,
            });
        }
    }
    Ok(peaks)
}

/// Number of leading peaks used to measure the oscillation period.
const PERIOD_PEAKS: usize = 20;

/// Vertex of the parabola through samples `i − 1, i, i + 1`, as (fractional
/// index, height).
fn refine(abs: &[f64], i: usize) -> (f64, f64) {
    let (l, c, r) = (abs[i - 1], abs[i], abs[i + 1]);
    let curvature = l - 2.0 * c + r;
    if curvature < 0.0 {
        let s = 0.5 * (l - r) / curvature;
        (i as f64 + s, c - 0.25 * (l - r) * s)
    } else {
        (i as f64, c)
    }
}

/// Median spacing (in samples) of the first sign changes of `q`.
fn dominant_half_period(q: &[f64]) -> Option<usize> {
    let mut crossings = Vec::new();
    for i in 1..q.len() {
        if (q[i - 1] < 0.0 && q[i] >= 0.0) || (q[i - 1] > 0.0 && q[i] <= 0.0) {
            crossings.push(i);
            if crossings.len() > 24 {
                break;
            }
        }
    }
    if crossings.len() < 3 {
        return None;
    }
    let mut gaps: Vec<usize> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_unstable();
    Some(gaps[gaps.len() / 2].max(2))
}

/// `out[i] = max(values[i - reach ..= i + reach])`, clipped at the ends.
fn sliding_max(values: &[f64], reach: usize) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for (i, slot) in out.iter_mut().enumerate() {
        let hi = (i + reach).min(n - 1);
        while next <= hi {
            while deque.back().is_some_and(|&b| values[b] <= values[next]) {
                deque.pop_back();
            }
            deque.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(reach);
        while deque.front().is_some_and(|&f| f < lo) {
            deque.pop_front();
        }
        *slot = values[*deque.front().expect("window is non-empty")];
    }
    out
}

/// Fits `ln A = c − rate·t` over the envelope peaks down to three e-folds
/// below the first peak, then measures the largest log deviation of the
/// later peaks from the extrapolated fit, as long as the fit stays above
/// [`ENVELOPE_FLOOR`] of the first peak.
pub fn analyze_decay(traj: &Trajectory, threshold: TailThreshold) -> Result<DecayAnalysis> {
    let peaks = envelope_peaks(traj)?;
    if peaks.len() < 4 {
        return Err(Error::domain(format!(
            "fewer than 4 envelope peaks ({})",
            peaks.len()
        )));
    }

    let cutoff = peaks[0].amplitude * (-3.0f64).exp();
    let split = peaks
        .iter()
        .position(|p| p.amplitude < cutoff)
        .ok_or_else(|| {
            Error::domain("trajectory does not contain 3 decay times: envelope never falls by e^-3")
        })?;
    let (fit, post) = peaks.split_at(split);
    if fit.len() < 3 {
        return Err(Error::domain(format!(
            "only {} envelope peaks inside the fit window; refine the grid",
            fit.len()
        )));
    }

    let (intercept, slope) = least_squares(fit);
    let ln_fit = |t: f64| intercept + slope * t;
    let residual = |p: &Peak| p.amplitude.ln() - ln_fit(p.t);
    let fit_rms = (fit.iter().map(|p| residual(p).powi(2)).sum::<f64>() / fit.len() as f64).sqrt();
    // Only where the extrapolated exponential is still above the floor: the
    // residual then compares a tail against a fixed depth of the exponential
    // and does not keep growing with the length of the run.
    let floor = (ENVELOPE_FLOOR * fit[0].amplitude).ln();
    let post: Vec<&Peak> = post.iter().filter(|p| ln_fit(p.t) >= floor).collect();
    let tail_residual = post.iter().map(|p| residual(p).abs()).fold(0.0, f64::max);

    let threshold = match threshold {
        TailThreshold::RmsMultiple(k) => {
            let spacing = (fit[fit.len() - 1].t - fit[0].t) / (fit.len() - 1) as f64;
            let sampling = (PI * traj.grid.dt / spacing).powi(3);
            k * fit_rms.max(RESIDUAL_FLOOR).max(sampling)
        }
        TailThreshold::Absolute(x) => x,
    };
    let classification = if tail_residual > threshold {
        Classification::Tailed
    } else {
        Classification::Exponential
    };
    Ok(DecayAnalysis {
        fitted_rate: -slope,
        fit_window: (fit[0].t, fit[fit.len() - 1].t),
        tail_residual,
        classification,
        fit_rms,
        threshold,
        peaks_in_fit: fit.len(),
        peaks_after_fit: post.len(),
    })
}

fn least_squares(peaks: &[Peak]) -> (f64, f64) {
    let n = peaks.len() as f64;
    let mean_t = peaks.iter().map(|p| p.t).sum::<f64>() / n;
    let mean_y = peaks.iter().map(|p| p.amplitude.ln()).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for p in peaks {
        let dx = p.t - mean_t;
        sxy += dx * (p.amplitude.ln() - mean_y);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    (mean_y - slope * mean_t, slope)
}
