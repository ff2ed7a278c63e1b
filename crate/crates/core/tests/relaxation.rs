use std::f64::consts::PI;

use approx::assert_relative_eq;

use memkernel::convolution::{TimeGrid, Trajectory};
use memkernel::kernels::{MenskyDamping, OhmicBath};
use memkernel::relaxation::{
    analyze_decay, envelope_peaks, max_step, simulate, Classification, FrictionKernel,
    OscillatorSpec, SimMode, TailThreshold,
};
use memkernel::Error;

fn kernel(eta: f64, omega: f64, gamma: f64) -> FrictionKernel {
    FrictionKernel::new(
        &OhmicBath::natural(eta, omega).unwrap(),
        &MenskyDamping::new(gamma).unwrap(),
    )
    .unwrap()
}

fn unit_oscillator() -> OscillatorSpec {
    OscillatorSpec::new(1.0, 1.0).unwrap()
}

/// `max |q_memory − q_markov| · e^{λt}` over `t ≤ t_max`, with `λ` the Markov
/// amplitude decay rate: the deviation measured against the Markov envelope.
fn envelope_relative_deviation(osc: &OscillatorSpec, k: &FrictionKernel, t_max: f64) -> f64 {
    let grid = TimeGrid::covering(max_step(osc, k), t_max).unwrap();
    let memory = simulate(SimMode::Memory, osc, k, grid, 1.0, 0.0).unwrap();
    let markov = simulate(SimMode::Markov, osc, k, grid, 1.0, 0.0).unwrap();
    let lambda = k.markov_total() / (2.0 * osc.mass_0);
    (0..grid.n_steps)
        .map(|n| (memory.q[n] - markov.q[n]).abs() * (lambda * grid.time(n)).exp())
        .fold(0.0, f64::max)
}

#[test]
fn wide_band_memory_run_tracks_markov_solution() {
    let osc = unit_oscillator();
    let k = kernel(0.2, 100.0, 0.0);
    assert_relative_eq!(k.markov_total(), 0.2, max_relative = 1e-15);
    // three amplitude decay times 2m/η
    let t_max = 3.0 * 2.0 * osc.mass_0 / k.markov_total();
    let grid = TimeGrid::covering(max_step(&osc, &k), t_max).unwrap();
    let memory = simulate(SimMode::Memory, &osc, &k, grid, 1.0, 0.0).unwrap();
    let markov = simulate(SimMode::Markov, &osc, &k, grid, 1.0, 0.0).unwrap();
    let worst = memory
        .q
        .iter()
        .zip(&markov.q)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.02, "max deviation {worst}");
}

#[test]
fn stronger_measurement_brings_memory_run_closer_to_markov() {
    let osc = unit_oscillator();
    for omega in [10.0, 100.0] {
        let deviations: Vec<f64> = [1.0, 3.0, 10.0]
            .iter()
            .map(|&gamma| envelope_relative_deviation(&osc, &kernel(0.2, omega, gamma), 30.0))
            .collect();
        assert!(
            deviations.windows(2).all(|w| w[1] < w[0]),
            "Ω {omega}: {deviations:?}"
        );
    }
}

#[test]
fn energy_does_not_grow_between_peaks() {
    let osc = unit_oscillator();
    let k = kernel(0.3, 50.0, 0.0);
    let grid = TimeGrid::covering(max_step(&osc, &k), 40.0).unwrap();
    let traj = simulate(SimMode::Memory, &osc, &k, grid, 1.0, 0.0).unwrap();
    let v = traj.velocity();
    let energies: Vec<f64> = envelope_peaks(&traj)
        .unwrap()
        .iter()
        .map(|p| {
            let n = (p.t / grid.dt).round() as usize;
            osc.energy(traj.q[n], v[n])
        })
        .collect();
    assert!(energies.len() > 10);
    assert!(
        energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)),
        "{energies:?}"
    );
}

#[test]
fn frictionless_oscillator_conserves_energy() {
    let osc = OscillatorSpec::new(2.0, 3.0).unwrap();
    let k = FrictionKernel::frictionless(10.0);
    let grid = TimeGrid::covering(max_step(&osc, &k), 20.0).unwrap();
    let traj = simulate(SimMode::Memory, &osc, &k, grid, 0.5, -1.0).unwrap();
    let v = traj.velocity();
    let e0 = osc.energy(0.5, -1.0);
    for (&q, &vn) in traj.q.iter().zip(&v) {
        assert_relative_eq!(osc.energy(q, vn), e0, max_relative = 1e-10);
    }
}

#[test]
fn memory_integrator_is_second_order() {
    let osc = unit_oscillator();
    let k = kernel(0.5, 5.0, 0.5);
    let base = max_step(&osc, &k);
    let run = |dt: f64| {
        let grid = TimeGrid::covering(dt, 10.0).unwrap();
        simulate(SimMode::Memory, &osc, &k, grid, 1.0, 0.0)
            .unwrap()
            .q
    };
    let (a, b, c) = (run(base), run(base / 2.0), run(base / 4.0));
    let mut d1: f64 = 0.0;
    let mut d2: f64 = 0.0;
    for i in 0..a.len() {
        d1 = d1.max((a[i] - b[2 * i]).abs());
        d2 = d2.max((b[2 * i] - c[4 * i]).abs());
    }
    let ratio = d1 / d2;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn oversized_step_is_a_domain_error() {
    let osc = unit_oscillator();
    let k = kernel(0.2, 50.0, 0.0);
    let grid = TimeGrid::covering(2.0 * max_step(&osc, &k), 1.0).unwrap();
    assert!(matches!(
        simulate(SimMode::Memory, &osc, &k, grid, 1.0, 0.0),
        Err(Error::Domain(_))
    ));
    // the analytic Markov solution has no step limit
    assert!(simulate(SimMode::Markov, &osc, &k, grid, 1.0, 0.0).is_ok());
}

#[test]
fn markov_solution_covers_all_damping_regimes() {
    let osc = unit_oscillator();
    let grid = TimeGrid::new(1e-3, 5001).unwrap();
    for eta_total in [0.4, 2.0, 5.0] {
        let k = FrictionKernel::new(
            &OhmicBath::natural(eta_total, 1e9).unwrap(),
            &MenskyDamping::none(),
        )
        .unwrap();
        let traj = simulate(SimMode::Markov, &osc, &k, grid, 1.0, 0.3).unwrap();
        let v = traj.velocity();
        assert_eq!(traj.q[0], 1.0);
        assert_relative_eq!(v[0], 0.3, max_relative = 1e-14);
        // residual of m q̈ + m ω₀² q + η q̇ = 0 by central differences
        for n in (1..grid.n_steps - 1).step_by(50) {
            let acc = (traj.q[n + 1] - 2.0 * traj.q[n] + traj.q[n - 1]) / (grid.dt * grid.dt);
            let residual = acc + traj.q[n] + k.markov_total() * v[n];
            assert!(
                residual.abs() < 1e-5,
                "η {eta_total}, t {}: {residual}",
                grid.time(n)
            );
        }
    }
}

#[test]
fn cut_off_sweep_orders_the_tail() {
    let osc = unit_oscillator();
    let residuals: Vec<f64> = [20.0, 50.0, 100.0]
        .iter()
        .map(|&omega| {
            let k = kernel(0.2, omega, 0.0);
            let grid = TimeGrid::covering(max_step(&osc, &k), 300.0).unwrap();
            let traj = simulate(SimMode::Memory, &osc, &k, grid, 1.0, 0.0).unwrap();
            let a = analyze_decay(&traj, TailThreshold::default()).unwrap();
            assert_eq!(a.classification, Classification::Tailed, "Ω {omega}");
            a.tail_residual
        })
        .collect();
    assert!(residuals.windows(2).all(|w| w[1] < w[0]), "{residuals:?}");
}

#[test]
fn synthetic_exponential_is_classified_exponential() {
    let grid = TimeGrid::new(0.01, 20001).unwrap();
    let rate = 0.15;
    let traj = Trajectory::from_fn(grid, |t| (-rate * t).exp() * (2.0 * t).cos());
    let a = analyze_decay(&traj, TailThreshold::default()).unwrap();
    assert_eq!(a.classification, Classification::Exponential);
    assert_relative_eq!(a.fitted_rate, rate, max_relative = 1e-3);
    assert!(a.peaks_in_fit >= 3);
}

#[test]
fn synthetic_algebraic_tail_is_detected() {
    let grid = TimeGrid::new(0.01, 30001).unwrap();
    let traj = Trajectory::from_fn(grid, |t| {
        ((-0.2 * t).exp() + 1e-7 / (1.0 + t * t)) * (2.0 * PI * t / 3.0).cos()
    });
    let a = analyze_decay(&traj, TailThreshold::default()).unwrap();
    assert_eq!(a.classification, Classification::Tailed, "{a:?}");
    assert!(a.peaks_after_fit > 0);
    let strict = analyze_decay(&traj, TailThreshold::Absolute(1e3)).unwrap();
    assert_eq!(strict.classification, Classification::Exponential);
    assert_eq!(strict.threshold, 1e3);
}

#[test]
fn decay_analysis_needs_oscillations() {
    let grid = TimeGrid::new(0.01, 1000).unwrap();
    let flat = Trajectory::from_fn(grid, |_| 1.0);
    assert!(analyze_decay(&flat, TailThreshold::default()).is_err());
}
