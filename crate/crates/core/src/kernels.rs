//! Zero-temperature ohmic memory kernels and their scalar diagnostics.
//!
//! With the ohmic coupling density `J(ω) = ηω` on `[0, Ω]` the two kernels of
//! the influence functional are
//!
//! ```text
//! α_R(τ) =  (η/π) ∫₀^Ω ω cos ωτ dω = (η/π) [Ω sin Ωτ/τ − 2 sin²(Ωτ/2)/τ²]
//! α_I(τ) = −(η/π) ∫₀^Ω ω sin ωτ dω = (η/π) d/dτ (sin Ωτ/τ)
//! ```
//!
//! A Mensky measurement of every bath oscillator at rate Γ damps them:
//! `α_R^Γ = α_R e^{−Γτ}` and, to first order in Γ,
//! `α_I^Γ = (η/π) d/dτ[(sin Ωτ/τ) e^{−Γτ}]`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

/// Below this value of `Ωτ` the closed forms are replaced by their Taylor
/// series (both are 0/0 at the origin).
pub const SERIES_THRESHOLD: f64 = 1e-3;

/// Ratio `Γ/Ω` above which the first-order treatment in Γ is flagged.
pub const PERTURBATIVE_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhmicBath {
    /// Friction strength η.
    pub eta: f64,
    /// Cutoff angular frequency Ω.
    pub omega_cut: f64,
    /// Bath oscillator mass m_B.
    pub mass_b: f64,
}

impl OhmicBath {
    pub fn new(eta: f64, omega_cut: f64, mass_b: f64) -> Result<Self> {
        let bath = OhmicBath {
            eta,
            omega_cut,
            mass_b,
        };
        bath.validate()?;
        Ok(bath)
    }

    /// Natural-units bath with unit bath mass.
    pub fn natural(eta: f64, omega_cut: f64) -> Result<Self> {
        Self::new(eta, omega_cut, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        positive("eta", self.eta)?;
        positive("omega_cut", self.omega_cut)?;
        positive("mass_b", self.mass_b)
    }

    /// Ohmic coupling density `J(ω) = ηω` for `0 ≤ ω ≤ Ω`, zero above the cutoff.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        if (0.0..=self.omega_cut).contains(&omega) {
            self.eta * omega
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MenskyDamping {
    /// Constraint rate Γ.
    pub gamma: f64,
}

impl MenskyDamping {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::domain(format!(
                "gamma must be finite and >= 0, got {gamma}"
            )));
        }
        Ok(MenskyDamping { gamma })
    }

    pub const fn none() -> Self {
        MenskyDamping { gamma: 0.0 }
    }

    pub fn is_undamped(&self) -> bool {
        self.gamma == 0.0
    }

    /// True while `Γ < 0.1 Ω`, the regime where terms of order Γ are negligible.
    pub fn is_perturbative(&self, bath: &OhmicBath) -> bool {
        self.gamma < PERTURBATIVE_RATIO * bath.omega_cut
    }

    /// Measurement strength `k(ω) = (Γ m_B/ħ)(ω − iΓ/2)`.
    pub fn strength(&self, omega: f64, mass_b: f64, hbar: f64) -> Complex64 {
        let scale = self.gamma * mass_b / hbar;
        Complex64::new(scale * omega, -scale * 0.5 * self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    #[serde(rename = "R")]
    R,
    #[serde(rename = "I")]
    I,
    #[serde(rename = "R_damped")]
    RDamped,
    #[serde(rename = "I_damped")]
    IDamped,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [
        KernelKind::R,
        KernelKind::I,
        KernelKind::RDamped,
        KernelKind::IDamped,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            KernelKind::R => "R",
            KernelKind::I => "I",
            KernelKind::RDamped => "R_damped",
            KernelKind::IDamped => "I_damped",
        }
    }

    pub fn is_damped(&self) -> bool {
        matches!(self, KernelKind::RDamped | KernelKind::IDamped)
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R" | "r" => Ok(KernelKind::R),
            "I" | "i" => Ok(KernelKind::I),
            "R_damped" | "r_damped" | "R-damped" => Ok(KernelKind::RDamped),
            "I_damped" | "i_damped" | "I-damped" => Ok(KernelKind::IDamped),
            other => Err(Error::domain(format!("unknown kernel kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Closed,
    Quadrature,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Closed => "closed",
            Method::Quadrature => "quadrature",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(Method::Closed),
            "quadrature" | "quad" => Ok(Method::Quadrature),
            other => Err(Error::domain(format!(
                "unknown evaluation method '{other}'"
            ))),
        }
    }
}

/// `∫₀¹ u cos(ux) du = sin x/x − 2 sin²(x/2)/x²`.
fn cos_moment(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD {
        let x2 = x * x;
        0.5 - x2 / 8.0 + x2 * x2 / 144.0
    } else {
        let h = (0.5 * x).sin();
        x.sin() / x - 2.0 * h * h / (x * x)
    }
}

/// `−∫₀¹ u sin(ux) du = cos x/x − sin x/x²`.
fn sin_moment(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD {
        let x2 = x * x;
        -x / 3.0 + x * x2 / 30.0 - x * x2 * x2 / 840.0
    } else {
        x.cos() / x - x.sin() / (x * x)
    }
}

/// `sin x / x`.
fn sinc(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `(sin Ωτ/τ) e^{−Γτ}`, finite at `τ = 0` where it equals Ω.
pub fn damped_sinc(omega_cut: f64, gamma: f64, tau: f64) -> f64 {
    omega_cut * sinc(omega_cut * tau) * (-gamma * tau).exp()
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::domain(format!(
            "kernel lag must be finite and >= 0, got {tau}"
        )));
    }
    Ok(())
}

fn check_kind(kind: KernelKind, damping: &MenskyDamping) -> Result<()> {
    if !kind.is_damped() && !damping.is_undamped() {
        return Err(Error::domain(format!(
            "kernel {kind} is the undamped kernel; use {}_damped for gamma = {}",
            kind.as_str(),
            damping.gamma
        )));
    }
    Ok(())
}

/// Closed-form kernel value; callers have already validated the inputs.
pub(crate) fn closed_form(kind: KernelKind, tau: f64, bath: &OhmicBath, gamma: f64) -> f64 {
    let omega = bath.omega_cut;
    let x = omega * tau;
    let scale = bath.eta * omega * omega / PI;
    match kind {
        KernelKind::R => scale * cos_moment(x),
        KernelKind::I => scale * sin_moment(x),
        KernelKind::RDamped => scale * cos_moment(x) * (-gamma * tau).exp(),
        KernelKind::IDamped => {
            let d_sinc = omega * omega * sin_moment(x);
            bath.eta / PI * (d_sinc - gamma * omega * sinc(x)) * (-gamma * tau).exp()
        }
    }
}

/// `α_I(τ) e^{−Γτ}`: the imaginary kernel times the exact damping factor,
/// without the first-order rewriting used by [`KernelKind::IDamped`].
pub(crate) fn imag_times_damping(tau: f64, bath: &OhmicBath, gamma: f64) -> f64 {
    closed_form(KernelKind::I, tau, bath, 0.0) * (-gamma * tau).exp()
}

fn band_breakpoints(omega: f64, tau: f64, offset: f64) -> Vec<f64> {
    if tau == 0.0 {
        return vec![0.0, omega];
    }
    let spacing = PI / tau;
    let mut points = vec![0.0];
    let first = offset * spacing;
    if first < omega {
        points.extend(quadrature::oscillation_breakpoints(first, omega, spacing));
    } else {
        points.push(omega);
    }
    points.dedup();
    points
}

fn quadrature_form(kind: KernelKind, tau: f64, bath: &OhmicBath, gamma: f64) -> Result<f64> {
    let omega = bath.omega_cut;
    // The Gauss–Kronrod error estimate bottoms out near 50 eps ∫|integrand|,
    // which is of order eps Ω²; asking for less cannot be certified.
    let tol = Tolerance::new(2e-14 * (omega * omega + gamma * omega), 1e-13);
    let panels = 4 * ((omega * tau / PI) as usize + 16);
    let value = match kind {
        KernelKind::R | KernelKind::RDamped => {
            let bp = band_breakpoints(omega, tau, 0.5);
            let r = quadrature::integrate_with_breakpoints(
                |w: f64| w * (w * tau).cos(),
                &bp,
                tol,
                panels,
            )?;
            bath.eta / PI * r.value
        }
        KernelKind::I => {
            let bp = band_breakpoints(omega, tau, 1.0);
            let r = quadrature::integrate_with_breakpoints(
                |w: f64| w * (w * tau).sin(),
                &bp,
                tol,
                panels,
            )?;
            -bath.eta / PI * r.value
        }
        KernelKind::IDamped => {
            let bp = band_breakpoints(omega, tau, 0.5);
            let r = quadrature::integrate_with_breakpoints(
                |w: f64| -w * (w * tau).sin() - gamma * (w * tau).cos(),
                &bp,
                tol,
                panels,
            )?;
            bath.eta / PI * r.value
        }
    };
    Ok(match kind {
        KernelKind::RDamped | KernelKind::IDamped => value * (-gamma * tau).exp(),
        _ => value,
    })
}

/// Kernel value at lag `tau`.
///
/// Kinds `R` and `I` are the undamped kernels and reject `Γ > 0`.
pub fn eval_kernel(
    kind: KernelKind,
    method: Method,
    tau: f64,
    bath: &OhmicBath,
    damping: &MenskyDamping,
) -> Result<f64> {
    check_tau(tau)?;
    bath.validate()?;
    check_kind(kind, damping)?;
    let value = match method {
        Method::Closed => closed_form(kind, tau, bath, damping.gamma),
        Method::Quadrature => quadrature_form(kind, tau, bath, damping.gamma)?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::numeric(
            format!("{kind} kernel overflowed at tau = {tau}"),
            f64::INFINITY,
        ))
    }
}

/// A sampled kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub kind: KernelKind,
    pub method: Method,
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
}

impl KernelEval {
    pub fn sample(
        kind: KernelKind,
        method: Method,
        taus: Vec<f64>,
        bath: &OhmicBath,
        damping: &MenskyDamping,
    ) -> Result<Self> {
        if taus.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain(
                "kernel sample times must be strictly increasing",
            ));
        }
        let values = taus
            .iter()
            .map(|&t| eval_kernel(kind, method, t, bath, damping))
            .collect::<Result<Vec<_>>>()?;
        Ok(KernelEval {
            kind,
            method,
            taus,
            values,
        })
    }

    /// Samples at the lags `0, dt, 2dt, ...` of a uniform grid.
    pub fn on_lags(
        kind: KernelKind,
        method: Method,
        dt: f64,
        count: usize,
        bath: &OhmicBath,
        damping: &MenskyDamping,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::domain("lag spacing must be positive"));
        }
        let taus = (0..count).map(|k| k as f64 * dt).collect();
        Self::sample(kind, method, taus, bath, damping)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Upper limit of a kernel integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

impl Horizon {
    pub fn value(&self) -> f64 {
        match self {
            Horizon::Finite(t) => *t,
            Horizon::Infinite => f64::INFINITY,
        }
    }
}

impl FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "∞" => Ok(Horizon::Infinite),
            other => other
                .parse::<f64>()
                .map(|t| {
                    if t.is_infinite() {
                        Horizon::Infinite
                    } else {
                        Horizon::Finite(t)
                    }
                })
                .map_err(|_| Error::domain(format!("invalid horizon '{other}'"))),
        }
    }
}

/// Markov weight `∫₀^horizon K(τ) dτ`.
///
/// Every infinite horizon and every finite horizon with an elementary
/// antiderivative is evaluated in closed form; only the damped real kernel at
/// a finite horizon falls back to adaptive quadrature.
pub fn markov_weight(
    kind: KernelKind,
    bath: &OhmicBath,
    damping: &MenskyDamping,
    horizon: Horizon,
) -> Result<f64> {
    bath.validate()?;
    check_kind(kind, damping)?;
    if let Horizon::Finite(t) = horizon {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("horizon must be > 0, got {t}")));
        }
    }
    let eta = bath.eta;
    let omega = bath.omega_cut;
    let gamma = damping.gamma;

    let value = match (kind, horizon) {
        // (η/π)(1 − cos ΩT)/T → 0: the two halves ηΩ/2 cancel.
        (KernelKind::R, Horizon::Infinite) => 0.0,
        (KernelKind::RDamped, Horizon::Infinite) => kernel_time_scale(bath, damping).value,
        (KernelKind::R, Horizon::Finite(t)) => undamped_real_partial(eta, omega, t),
        (KernelKind::RDamped, Horizon::Finite(t)) if gamma == 0.0 => {
            undamped_real_partial(eta, omega, t)
        }
        (KernelKind::RDamped, Horizon::Finite(t)) => {
            let bp = quadrature::oscillation_breakpoints(0.0, t, PI / omega);
            // ∫|α_R| grows like ηΩ ln(ΩT); keep the target above the roundoff floor.
            let tol = Tolerance::new(1e-13 * eta * omega * (1.0 + (omega * t).ln_1p()), 1e-12);
            let panels = (2 * bp.len()).max(2_000_000);
            quadrature::integrate_with_breakpoints(
                |tau: f64| closed_form(kind, tau, bath, gamma),
                &bp,
                tol,
                panels,
            )?
            .value
        }
        // Antiderivative (η/π)(sin Ωτ/τ)e^{−Γτ}, equal to ηΩ/π at the origin.
        (KernelKind::I | KernelKind::IDamped, Horizon::Infinite) => -eta * omega / PI,
        (KernelKind::I, Horizon::Finite(t)) => eta / PI * (damped_sinc(omega, 0.0, t) - omega),
        (KernelKind::IDamped, Horizon::Finite(t)) => {
            eta / PI * (damped_sinc(omega, gamma, t) - omega)
        }
    };
    Ok(value)
}

fn undamped_real_partial(eta: f64, omega: f64, t: f64) -> f64 {
    let h = (0.5 * omega * t).sin();
    eta / PI * 2.0 * h * h / t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationCoefficients {
    /// Coefficient of `q(t)`: `−ηΩ/π`.
    pub position: f64,
    /// Coefficient of `q̇(t)`: `(η/π) arctan(Ω/Γ)`, `η/2` at Γ = 0.
    pub velocity: f64,
}

/// Markov coefficients of the damped dissipative convolution.
pub fn markov_dissipation_coefficients(
    bath: &OhmicBath,
    damping: &MenskyDamping,
) -> DissipationCoefficients {
    let velocity = if damping.is_undamped() {
        0.5 * bath.eta
    } else {
        bath.eta / PI * (bath.omega_cut / damping.gamma).atan()
    };
    DissipationCoefficients {
        position: -bath.eta * bath.omega_cut / PI,
        velocity,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelTimeScale {
    pub value: f64,
    /// Set when Γ = 0 and the value is the limit rather than an integral.
    pub exact_limit: bool,
}

/// `τ_R = ∫₀^∞ α_R e^{−Γτ} dτ = (η/2π) Γ ln((Γ² + Ω²)/Γ²)`.
pub fn kernel_time_scale(bath: &OhmicBath, damping: &MenskyDamping) -> KernelTimeScale {
    let gamma = damping.gamma;
    if gamma == 0.0 {
        return KernelTimeScale {
            value: 0.0,
            exact_limit: true,
        };
    }
    let ratio = bath.omega_cut / gamma;
    // ln(1 + r²) without overflowing r² for tiny Γ/Ω
    let log = if ratio > 1e100 {
        2.0 * ratio.ln()
    } else {
        (ratio * ratio).ln_1p()
    };
    KernelTimeScale {
        value: bath.eta / (2.0 * PI) * gamma * log,
        exact_limit: false,
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be finite and > 0, got {value}"
        )))
    }
}
