//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use memkernel::convolution::{TimeGrid, Trajectory};

/// `L(τ) = (η/π) ∫₀^Ω ω e^{−iωτ} dω` by composite 8-point Gauss–Legendre,
/// returned as `(Re, Im)`.
pub fn spectral_correlation(eta: f64, omega: f64, tau: f64) -> (f64, f64) {
    const X: [f64; 4] = [
        0.1834346424956498,
        0.525532409916329,
        0.7966664774136267,
        0.9602898564975363,
    ];
    const W: [f64; 4] = [
        0.362683783378362,
        0.3137066458778873,
        0.2223810344533745,
        0.1012285362903763,
    ];
    let panels = 64 + (omega * tau) as usize;
    let h = omega / panels as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in X.iter().zip(W) {
            for w_node in [mid - 0.5 * h * x, mid + 0.5 * h * x] {
                let weight = 0.5 * h * w * w_node;
                re += weight * (w_node * tau).cos();
                im -= weight * (w_node * tau).sin();
            }
        }
    }
    (eta / PI * re, eta / PI * im)
}

/// Direct double sum of the influence exponent over `t′ ≤ t`, trapezoid
/// weights in both variables.
pub fn double_sum_exponent(
    q1: &[f64],
    q2: &[f64],
    dt: f64,
    eta: f64,
    omega: f64,
    gamma: f64,
    hbar: f64,
) -> (f64, f64) {
    let n = q1.len();
    let total = (n - 1) as f64 * dt;
    let lag: Vec<(f64, f64)> = (0..n)
        .map(|k| spectral_correlation(eta, omega, k as f64 * dt))
        .collect();
    let (mut re, mut im) = (0.0, 0.0);
    for i in 1..n {
        let t = i as f64 * dt;
        let outer = if i == n - 1 { 0.5 } else { 1.0 };
        for j in 0..=i {
            let s = j as f64 * dt;
            let inner = if j == 0 || j == i { 0.5 } else { 1.0 };
            let w = outer * inner * dt * dt;
            let (lr, li) = lag[i - j];
            let near = (-gamma * (t - s)).exp();
            let far = (-gamma * (2.0 * total - t - s)).exp();
            // q₁ L q₁′ + q₂ L* q₂′ − q₁ L* q₂′ − q₂ L q₁′ with the damping factors
            re += w
                * lr
                * (near * (q1[i] * q1[j] + q2[i] * q2[j]) - far * (q1[i] * q2[j] + q2[i] * q1[j]));
            im += w
                * li
                * (near * (q1[i] * q1[j] - q2[i] * q2[j]) + far * (q1[i] * q2[j] - q2[i] * q1[j]));
        }
    }
    (re / hbar, im / hbar)
}

pub fn random_path(rng: &mut ChaCha8Rng, grid: TimeGrid) -> Trajectory {
    let modes: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.2..3.0),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let offset = rng.gen_range(-0.5..0.5);
    Trajectory::from_fn(grid, move |t| {
        offset
            + modes
                .iter()
                .map(|(a, w, p)| a * (w * t + p).cos())
                .sum::<f64>()
    })
}
