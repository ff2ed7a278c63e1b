//! Self-consistency audit of the measured-bath reduction, in CGS units.
//!
//! The Markov reduction with a measured bath needs the rates ordered as
//! `η < Γ < Ω`, while the measurement strength `k(ω) = (Γ m_B/ħ)(ω − iΓ/2)`
//! grows with Γ. The audit checks the ordering, evaluates `k` at the cutoff
//! and reports how far the perturbative expansion in Γ is stretched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{MenskyDamping, PERTURBATIVE_RATIO};
use crate::units::{NaturalScale, HBAR_CGS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// erg·s
    pub hbar: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants { hbar: HBAR_CGS }
    }
}

/// Rates in s⁻¹, mass in g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditInput {
    pub eta: f64,
    pub gamma: f64,
    pub omega_cut: f64,
    pub mass_b: f64,
    /// System frequency, only used for an informational ratio.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_0: Option<f64>,
}

impl AuditInput {
    /// The reference parameter set: η = 10⁹ s⁻¹, Γ = 10¹⁰ s⁻¹, Ω = 10¹² s⁻¹,
    /// m_B = 10⁻²⁴ g.
    pub fn reference_preset() -> Self {
        AuditInput {
            eta: 1e9,
            gamma: 1e10,
            omega_cut: 1e12,
            mass_b: 1e-24,
            omega_0: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("eta", self.eta),
            ("gamma", self.gamma),
            ("omega_cut", self.omega_cut),
            ("mass_b", self.mass_b),
        ];
        for (name, v) in named
            .into_iter()
            .chain(self.omega_0.map(|w| ("omega_0", w)))
        {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub gamma_over_eta: f64,
    pub omega_over_gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub pass: bool,
    pub margins: Margins,
}

/// Strict `η < Γ < Ω`.
pub fn ordering_check(input: &AuditInput) -> OrderingCheck {
    OrderingCheck {
        pass: input.eta < input.gamma && input.gamma < input.omega_cut,
        margins: Margins {
            gamma_over_eta: input.gamma / input.eta,
            omega_over_gamma: input.omega_cut / input.gamma,
        },
    }
}

/// Measurement strength `k(ω) = (Γ m_B/ħ)(ω − iΓ/2)` in cm⁻²s⁻¹, as
/// `(real, imag)`.
pub fn mensky_strength(
    omega: f64,
    gamma: f64,
    mass_b: f64,
    constants: &PhysicalConstants,
) -> Result<(f64, f64)> {
    if !(omega >= 0.0) {
        return Err(Error::domain(format!("omega must be >= 0, got {omega}")));
    }
    let k = MenskyDamping::new(gamma)?.strength(omega, mass_b, constants.hbar);
    Ok((k.re, k.im))
}

/// The same strength computed in natural units (time `1/Ω`, mass `m_B`,
/// action `ħ`) and converted back to CGS.
pub fn mensky_strength_via_natural(
    input: &AuditInput,
    constants: &PhysicalConstants,
) -> Result<(f64, f64)> {
    let scale = NaturalScale::from_cutoff(input.omega_cut, input.mass_b, constants.hbar)?;
    let natural = PhysicalConstants { hbar: 1.0 };
    let (re, im) = mensky_strength(
        scale.rate_to_natural(input.omega_cut),
        scale.rate_to_natural(input.gamma),
        scale.mass_to_natural(input.mass_b),
        &natural,
    )?;
    Ok((
        scale.strength_from_natural(re),
        scale.strength_from_natural(im),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FlagLevel {
    Info,
    Note,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub level: FlagLevel,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl Flag {
    fn new(level: FlagLevel, code: &str, message: String, value: Option<f64>) -> Self {
        Flag {
            level,
            code: code.to_string(),
            message,
            value,
        }
    }
}

/// WARN when `Γ/Ω` leaves the first-order range, INFO ratios otherwise, and
/// a NOTE when Γ = 0.
pub fn perturbative_flags(gamma: f64, omega_cut: f64, omega_0: Option<f64>) -> Vec<Flag> {
    let mut flags = Vec::new();
    if gamma == 0.0 {
        flags.push(Flag::new(
            FlagLevel::Note,
            "UNMEASURED_BATH",
            "gamma = 0: nothing suppresses the long-time memory of the kernels, so the Markov reduction \
             carries no guarantee beyond intermediate times"
                .to_string(),
            None,
        ));
        return flags;
    }
    let ratio = gamma / omega_cut;
    if ratio > PERTURBATIVE_RATIO {
        flags.push(Flag::new(
            FlagLevel::Warn,
            "GAMMA_OVER_OMEGA",
            format!("gamma/omega_cut = {ratio:e} exceeds {PERTURBATIVE_RATIO}; terms beyond first order in gamma are not small"),
            Some(ratio),
        ));
    } else {
        flags.push(Flag::new(
            FlagLevel::Info,
            "GAMMA_OVER_OMEGA",
            format!("gamma/omega_cut = {ratio:e}"),
            Some(ratio),
        ));
    }
    if let Some(w0) = omega_0 {
        let r = gamma / w0;
        let level = if r > PERTURBATIVE_RATIO {
            FlagLevel::Warn
        } else {
            FlagLevel::Info
        };
        flags.push(Flag::new(
            level,
            "GAMMA_OVER_OMEGA_0",
            format!("gamma/omega_0 = {r:e}"),
            Some(r),
        ));
    }
    flags
}

/// Inputs as echoed in the report, with the constant and evaluation
/// frequency that were used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportInputs {
    #[serde(flatten)]
    pub input: AuditInput,
    pub hbar: f64,
    /// Frequency at which `k` is evaluated (the cutoff).
    pub k_omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub inputs: ReportInputs,
    pub ordering_pass: bool,
    pub margins: Margins,
    /// cm⁻²s⁻¹
    pub k_real: f64,
    /// cm⁻²s⁻¹
    pub k_imag: f64,
    pub flags: Vec<Flag>,
    pub verdict: String,
}

impl AuditReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("audit report is always serialisable")
    }
}

pub fn audit(input: &AuditInput, constants: &PhysicalConstants) -> Result<AuditReport> {
    input.validate()?;
    let ordering = ordering_check(input);
    let (k_real, k_imag) = mensky_strength(input.omega_cut, input.gamma, input.mass_b, constants)?;
    let flags = perturbative_flags(input.gamma, input.omega_cut, input.omega_0);
    let verdict = verdict(&ordering, &flags, k_real);
    Ok(AuditReport {
        inputs: ReportInputs {
            input: *input,
            hbar: constants.hbar,
            k_omega: input.omega_cut,
        },
        ordering_pass: ordering.pass,
        margins: ordering.margins,
        k_real,
        k_imag,
        flags,
        verdict,
    })
}

fn verdict(ordering: &OrderingCheck, flags: &[Flag], k_real: f64) -> String {
    let m = ordering.margins;
    if !ordering.pass {
        let broken = if m.gamma_over_eta <= 1.0 {
            "gamma must exceed eta"
        } else {
            "gamma must stay below omega_cut"
        };
        return format!(
            "INCONSISTENT: rate ordering eta < gamma < omega_cut violated ({broken}; gamma/eta = {:e}, omega_cut/gamma = {:e})",
            m.gamma_over_eta, m.omega_over_gamma
        );
    }
    let warned = flags.iter().any(|f| f.level == FlagLevel::Warn);
    let expansion = if warned {
        "; in addition the expansion in gamma is stretched beyond first order"
    } else {
        ""
    };
    format!(
        "STRAINED: rate ordering holds (gamma/eta = {:e}, omega_cut/gamma = {:e}), but keeping gamma above eta \
         fixes the measurement strength at k_real = {k_real:e} cm^-2 s^-1, far beyond any plausible \
         environmental monitoring{expansion}",
        m.gamma_over_eta, m.omega_over_gamma
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_passes_with_expected_margins() {
        let r = audit(
            &AuditInput::reference_preset(),
            &PhysicalConstants::default(),
        )
        .unwrap();
        assert!(r.ordering_pass);
        assert!((r.margins.gamma_over_eta - 10.0).abs() < 1e-12);
        assert!((r.margins.omega_over_gamma - 100.0).abs() < 1e-12);
        assert!(r.k_real > 9.4e24 && r.k_real < 9.5e24);
        assert!(r.flags.iter().all(|f| f.level != FlagLevel::Warn));
    }

    #[test]
    fn strict_ordering() {
        let mut i = AuditInput::reference_preset();
        i.gamma = i.eta;
        assert!(!ordering_check(&i).pass);
        i.gamma = 1e13;
        assert!(!ordering_check(&i).pass);
    }

    #[test]
    fn strength_parts() {
        let c = PhysicalConstants::default();
        let (re, im) = mensky_strength(0.0, 1e10, 1e-24, &c).unwrap();
        assert_eq!(re, 0.0);
        assert!((im + 1e20 * 1e-24 / (2.0 * HBAR_CGS)).abs() < 1e-12 * im.abs());
        assert!(mensky_strength(-1.0, 1e10, 1e-24, &c).is_err());
    }

    #[test]
    fn flag_levels() {
        assert!(perturbative_flags(1.0, 1.0, None)
            .iter()
            .any(|f| f.level == FlagLevel::Warn));
        let zero = perturbative_flags(0.0, 1.0, None);
        assert_eq!(zero.len(), 1);
        assert_eq!(zero[0].level, FlagLevel::Note);
    }
}
