use approx::assert_relative_eq;
use proptest::prelude::*;

use memkernel::audit::{
    audit, mensky_strength, mensky_strength_via_natural, ordering_check, perturbative_flags,
    AuditInput, FlagLevel, PhysicalConstants,
};
use memkernel::units::HBAR_CGS;

#[test]
fn reference_preset_is_strained() {
    let report = audit(
        &AuditInput::reference_preset(),
        &PhysicalConstants::default(),
    )
    .unwrap();
    assert!(report.ordering_pass);
    assert_relative_eq!(report.margins.gamma_over_eta, 10.0, max_relative = 1e-15);
    assert_relative_eq!(report.margins.omega_over_gamma, 100.0, max_relative = 1e-15);
    // (Γ m_B/ħ)·Ω with Γ = 1e10, m_B = 1e-24, Ω = 1e12
    assert_relative_eq!(
        report.k_real,
        1e10 * 1e-24 * 1e12 / HBAR_CGS,
        max_relative = 1e-14
    );
    assert_relative_eq!(report.k_real, 9.4825e24, max_relative = 1e-4);
    assert_relative_eq!(
        report.k_imag,
        -0.5 * 1e10 * 1e-24 * 1e10 / HBAR_CGS,
        max_relative = 1e-14
    );
    assert!(
        report.verdict.starts_with("STRAINED:"),
        "{}",
        report.verdict
    );
    assert!(report.flags.iter().all(|f| f.level != FlagLevel::Warn));
}

#[test]
fn ordering_is_strict() {
    let base = AuditInput::reference_preset();
    for (eta, gamma, omega) in [
        (1e10, 1e10, 1e12),
        (1e9, 1e12, 1e12),
        (1e11, 1e10, 1e12),
        (1e9, 1e13, 1e12),
    ] {
        let input = AuditInput {
            eta,
            gamma,
            omega_cut: omega,
            ..base
        };
        assert!(!ordering_check(&input).pass, "{eta} {gamma} {omega}");
        let report = audit(&input, &PhysicalConstants::default()).unwrap();
        assert!(
            report.verdict.starts_with("INCONSISTENT:"),
            "{}",
            report.verdict
        );
    }
}

#[test]
fn strength_is_linear_in_frequency() {
    let c = PhysicalConstants::default();
    let (re1, im1) = mensky_strength(1e12, 1e10, 1e-24, &c).unwrap();
    let (re2, im2) = mensky_strength(2e12, 1e10, 1e-24, &c).unwrap();
    assert_relative_eq!(re2, 2.0 * re1, max_relative = 1e-15);
    assert_eq!(im1, im2);
    let (re0, im0) = mensky_strength(0.0, 1e10, 1e-24, &c).unwrap();
    assert_eq!(re0, 0.0);
    assert!(im0 < 0.0);
    assert!(mensky_strength(-1.0, 1e10, 1e-24, &c).is_err());
}

#[test]
fn json_report_is_deterministic_with_fixed_keys() {
    let input = AuditInput {
        omega_0: Some(1e9),
        ..AuditInput::reference_preset()
    };
    let a = audit(&input, &PhysicalConstants::default())
        .unwrap()
        .to_json();
    let b = audit(&input, &PhysicalConstants::default())
        .unwrap()
        .to_json();
    assert_eq!(a.as_bytes(), b.as_bytes());
    let value: serde_json::Value = serde_json::from_str(&a).unwrap();
    let mut keys: Vec<&str> = value
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        [
            "flags",
            "inputs",
            "k_imag",
            "k_real",
            "margins",
            "ordering_pass",
            "verdict"
        ]
    );
    let inputs = value["inputs"].as_object().unwrap();
    for key in [
        "eta",
        "gamma",
        "omega_cut",
        "mass_b",
        "omega_0",
        "hbar",
        "k_omega",
    ] {
        assert!(inputs.contains_key(key), "{key}");
    }
}

#[test]
fn flags_track_the_expansion_parameter() {
    let small = perturbative_flags(1e10, 1e12, None);
    assert_eq!(small.len(), 1);
    assert_eq!(
        (small[0].level, small[0].code.as_str()),
        (FlagLevel::Info, "GAMMA_OVER_OMEGA")
    );
    let large = perturbative_flags(5e11, 1e12, Some(1e9));
    assert!(large.iter().all(|f| f.level == FlagLevel::Warn));
    assert_eq!(large.len(), 2);
    let none = perturbative_flags(0.0, 1e12, None);
    assert_eq!(
        (none[0].level, none[0].code.as_str()),
        (FlagLevel::Note, "UNMEASURED_BATH")
    );

    let stretched = AuditInput {
        gamma: 5e11,
        ..AuditInput::reference_preset()
    };
    let report = audit(&stretched, &PhysicalConstants::default()).unwrap();
    assert!(report.ordering_pass);
    assert!(
        report.verdict.starts_with("STRAINED:") && report.verdict.contains("beyond first order")
    );
}

#[test]
fn invalid_inputs_are_rejected() {
    for bad in [
        AuditInput {
            eta: 0.0,
            ..AuditInput::reference_preset()
        },
        AuditInput {
            mass_b: f64::NAN,
            ..AuditInput::reference_preset()
        },
        AuditInput {
            omega_0: Some(-1.0),
            ..AuditInput::reference_preset()
        },
    ] {
        assert!(audit(&bad, &PhysicalConstants::default()).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn natural_units_round_trip(
        log_gamma in 0.0f64..14.0,
        log_ratio in 0.1f64..6.0,
        log_mass in -30.0f64..-18.0,
    ) {
        let gamma = 10f64.powf(log_gamma);
        let input = AuditInput {
            eta: gamma / 10.0,
            gamma,
            omega_cut: gamma * 10f64.powf(log_ratio),
            mass_b: 10f64.powf(log_mass),
            omega_0: None,
        };
        let c = PhysicalConstants::default();
        let (re, im) = mensky_strength(input.omega_cut, input.gamma, input.mass_b, &c).unwrap();
        let (nre, nim) = mensky_strength_via_natural(&input, &c).unwrap();
        prop_assert!((re - nre).abs() <= 1e-12 * re.abs());
        prop_assert!((im - nim).abs() <= 1e-12 * im.abs());
    }
}
