//! The subcommands: parameter tables and the computations behind them.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use memkernel::audit::{audit, AuditInput, PhysicalConstants};
use memkernel::convolution::{
    convolution_error_report, default_transient_cut, dissipative_pair_convolution, markov_convolve,
    volterra_convolve, Mode, TimeGrid, Trajectory,
};
use memkernel::influence::{gamma_exponent, standard_exponent, ExponentRecord, PathPair};
use memkernel::io::{
    fmt_float, read_trajectory_csv, write_convolution_csv, write_kernel_csv, write_trajectory_csv,
};
use memkernel::kernels::{
    kernel_time_scale, markov_dissipation_coefficients, markov_weight, Horizon, KernelEval,
    KernelKind, MenskyDamping, Method, OhmicBath,
};
use memkernel::relaxation::{
    analyze_decay, max_step, simulate, DecayAnalysis, FrictionKernel, OscillatorSpec, SimMode,
    TailThreshold,
};
use memkernel::units::UnitMode;

use crate::axis::{grid_points, parse_axes};
use crate::config::{Param, Resolver};
use crate::error::CliError;
use crate::output::OutputDir;

const OUT: Param = Param::value(
    "out",
    "Output directory [env: MEMKERNEL_OUT; config key out; default: memkernel-out]",
    None,
);

/// Static description of a subcommand.
#[derive(Debug, Clone, Copy)]
pub struct CommandSpec {
    pub name: &'static str,
    pub about: &'static str,
    pub params: &'static [Param],
    pub units: UnitMode,
}

const KERNELS: &[Param] = &[
    Param::value("kind", "Kernel: R, I, R_damped or I_damped", Some("R")),
    Param::value(
        "method",
        "Evaluation method: closed or quadrature",
        Some("closed"),
    ),
    Param::value("eta", "Friction strength", Some("1")),
    Param::value("omega", "Cutoff frequency", Some("1")),
    Param::value("gamma", "Measurement rate (damped kinds only)", Some("0")),
    Param::value("tau_max", "Largest lag [default: 50/omega]", None),
    Param::value(
        "samples",
        "Number of equally spaced lags from 0 to tau_max",
        Some("1001"),
    ),
    OUT,
    Param::value("units", "Unit mode (natural only)", Some("natural")),
];

const WEIGHTS: &[Param] = &[
    Param::value("eta", "Friction strength", Some("1")),
    Param::value("omega", "Cutoff frequency", Some("1")),
    Param::value("gamma", "Measurement rate", Some("0")),
    Param::value(
        "horizon",
        "Upper integration limit: a time or 'inf'",
        Some("inf"),
    ),
    OUT,
    Param::value("units", "Unit mode (natural only)", Some("natural")),
];

const CONVOLVE: &[Param] = &[
    Param::value(
        "kernel",
        "dissipative, R, I, R_damped or I_damped",
        Some("dissipative"),
    ),
    Param::value("eta", "Friction strength", Some("1")),
    Param::value("omega", "Cutoff frequency", Some("100")),
    Param::value("gamma", "Measurement rate", Some("0")),
    Param::value(
        "input",
        "Trajectory CSV (t,q,v or t,q); replaces the built-in signal",
        None,
    ),
    Param::value("signal", "Built-in signal: cos, sin or const", Some("cos")),
    Param::value("omega_0", "Frequency of the built-in signal", Some("1")),
    Param::value(
        "dt",
        "Time step of the built-in signal [default: 0.05/omega]",
        None,
    ),
    Param::value("t_max", "Duration of the built-in signal", Some("20")),
    Param::value(
        "transient_cut",
        "Start of the error window [default: 5/gamma, or 5/omega]",
        None,
    ),
    OUT,
    Param::value("units", "Unit mode (natural only)", Some("natural")),
];

const INFLUENCE: &[Param] = &[
    Param::value("eta", "Friction strength", Some("1")),
    Param::value("omega", "Cutoff frequency", Some("20")),
    Param::value("gamma", "Measurement rate", Some("0")),
    Param::value("hbar", "Action unit", Some("1")),
    Param::value(
        "q1",
        "First path: cos, sin, const, zero or a trajectory CSV",
        Some("cos"),
    ),
    Param::value(
        "q2",
        "Second path: cos, sin, const, zero or a trajectory CSV",
        Some("zero"),
    ),
    Param::value("omega_0", "Frequency of built-in paths", Some("1")),
    Param::value("dt", "Time step of built-in paths", Some("0.01")),
    Param::value("t_max", "Duration of built-in paths", Some("4")),
    Param::value(
        "total_time",
        "Final time T of the late-time weight [default: end of grid]",
        None,
    ),
    OUT,
    Param::value("units", "Unit mode (natural only)", Some("natural")),
];

const RELAX: &[Param] = &[
    Param::value(
        "mode",
        "memory (friction kernel) or markov (analytic)",
        Some("memory"),
    ),
    Param::value("eta", "Friction strength", Some("0.2")),
    Param::value(
        "omega_ratio",
        "Cutoff over oscillator frequency",
        Some("50"),
    ),
    Param::value(
        "gamma",
        "Measurement rate, in units of the oscillator frequency",
        Some("0"),
    ),
    Param::value("mass_0", "Oscillator mass", Some("1")),
    Param::value("q0", "Initial position", Some("1")),
    Param::value("v0", "Initial velocity", Some("0")),
    Param::value("t_max", "Duration, in oscillator time units", Some("300")),
    Param::value(
        "dt",
        "Time step [default: the largest admissible step]",
        None,
    ),
    Param::value(
        "stride",
        "Write every stride-th sample of the trajectory",
        Some("1"),
    ),
    Param::switch(
        "analyze",
        "Also fit the decay envelope and classify the tail",
    ),
    Param::value(
        "tail_multiple",
        "Tail threshold in multiples of the fit RMS",
        Some("10"),
    ),
    Param::value(
        "tail_threshold",
        "Absolute log-residual threshold (overrides tail_multiple)",
        None,
    ),
    OUT,
    Param::value("units", "Unit mode (natural only)", Some("natural")),
];

const AUDIT: &[Param] = &[
    Param::value("preset", "Named input bundle: paper", None),
    Param::value("eta", "Friction rate [1/s]", None),
    Param::value("gamma", "Measurement rate [1/s]", None),
    Param::value("omega", "Cutoff frequency [1/s]", None),
    Param::value("mass_b", "Bath oscillator mass [g]", None),
    Param::value(
        "omega_0",
        "System frequency [1/s], for an informational ratio",
        None,
    ),
    Param::value(
        "hbar",
        "Reduced Planck constant [erg s]",
        Some("1.054571817e-27"),
    ),
    OUT,
    Param::value("units", "Unit mode (cgs only)", Some("cgs")),
];

const SWEEP: &[Param] = &[
    Param::value(
        "target",
        "Per-point computation: weights or relax",
        Some("weights"),
    ),
    Param::value(
        "axes",
        "Axis definitions name=log:a:b:n | lin:a:b:n | list:v1,..., separated by ';'",
        None,
    ),
    Param::value("jobs", "Worker threads [default: available cores]", None),
    Param::value("eta", "Friction strength", None),
    Param::value("omega", "Cutoff frequency (weights target)", None),
    Param::value("gamma", "Measurement rate", None),
    Param::value("horizon", "Upper integration limit (weights target)", None),
    Param::value("mode", "Simulation mode (relax target)", None),
    Param::value(
        "omega_ratio",
        "Cutoff over oscillator frequency (relax target)",
        None,
    ),
    Param::value("mass_0", "Oscillator mass (relax target)", None),
    Param::value("q0", "Initial position (relax target)", None),
    Param::value("v0", "Initial velocity (relax target)", None),
    Param::value("t_max", "Duration (relax target)", None),
    Param::value("dt", "Time step (relax target)", None),
    Param::value(
        "tail_multiple",
        "Tail threshold in fit-RMS multiples (relax target)",
        None,
    ),
    Param::value(
        "tail_threshold",
        "Absolute tail threshold (relax target)",
        None,
    ),
    OUT,
    Param::value("units", "Unit mode (natural only)", Some("natural")),
];

pub const COMMANDS: &[CommandSpec] = &[
    CommandSpec {
        name: "kernels",
        about: "Sample a memory kernel on a lag grid (kernels.csv)",
        params: KERNELS,
        units: UnitMode::Natural,
    },
    CommandSpec {
        name: "weights",
        about: "Markov weights, tau_R and dissipation coefficients (weights.json)",
        params: WEIGHTS,
        units: UnitMode::Natural,
    },
    CommandSpec {
        name: "convolve",
        about: "Exact and Markov convolutions of a trajectory with their error report",
        params: CONVOLVE,
        units: UnitMode::Natural,
    },
    CommandSpec {
        name: "influence",
        about: "Influence-functional exponent of a path pair (exponent.json)",
        params: INFLUENCE,
        units: UnitMode::Natural,
    },
    CommandSpec {
        name: "relax",
        about: "Oscillator with memory friction (trajectory.csv, optional decay analysis)",
        params: RELAX,
        units: UnitMode::Natural,
    },
    CommandSpec {
        name: "audit",
        about: "Rate-ordering and measurement-strength audit in CGS units (audit.json)",
        params: AUDIT,
        units: UnitMode::Cgs,
    },
    CommandSpec {
        name: "sweep",
        about: "Run weights or relax over a 1-2 axis parameter grid (summary.csv)",
        params: SWEEP,
        units: UnitMode::Natural,
    },
];

pub fn spec(name: &str) -> Option<&'static CommandSpec> {
    COMMANDS.iter().find(|c| c.name == name)
}

fn damping(r: &mut Resolver) -> Result<MenskyDamping, CliError> {
    Ok(MenskyDamping::new(r.number("gamma")?)?)
}

fn bath(r: &mut Resolver) -> Result<OhmicBath, CliError> {
    Ok(OhmicBath::natural(r.number("eta")?, r.number("omega")?)?)
}

pub fn kernels(r: &mut Resolver, out: &mut OutputDir) -> Result<(), CliError> {
    let kind: KernelKind = r.required("kind")?;
    let method: Method = r.required("method")?;
    let bath = bath(r)?;
    let damping = damping(r)?;
    let tau_max = r
        .optional_number("tau_max")?
        .unwrap_or(50.0 / bath.omega_cut);
    let samples: usize = r.required("samples")?;
    if samples < 2 {
        return Err(CliError::validation("samples must be >= 2"));
    }
    if !(tau_max > 0.0) {
        return Err(CliError::validation(format!(
            "tau_max must be > 0, got {tau_max}"
        )));
    }
    let taus: Vec<f64> = (0..samples)
        .map(|i| tau_max * i as f64 / (samples - 1) as f64)
        .collect();
    let eval = KernelEval::sample(kind, method, taus, &bath, &damping)?;
    out.write("kernels.csv", |w| {
        Ok(write_kernel_csv(w, &eval, &bath, &damping)?)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightsReport {
    pub eta: f64,
    pub omega_cut: f64,
    pub gamma: f64,
    /// A time, or the string "inf".
    pub horizon: serde_json::Value,
    pub weights: BTreeMap<&'static str, f64>,
    pub tau_r: f64,
    pub velocity_coeff: f64,
    pub position_coeff: f64,
    pub perturbative: bool,
}

pub fn weights_report(
    bath: &OhmicBath,
    damping: &MenskyDamping,
    horizon: Horizon,
) -> Result<WeightsReport, CliError> {
    let mut weights = BTreeMap::new();
    for kind in KernelKind::ALL {
        let d = if kind.is_damped() {
            *damping
        } else {
            MenskyDamping::none()
        };
        weights.insert(kind.as_str(), markov_weight(kind, bath, &d, horizon)?);
    }
    let coeffs = markov_dissipation_coefficients(bath, damping);
    Ok(WeightsReport {
        eta: bath.eta,
        omega_cut: bath.omega_cut,
        gamma: damping.gamma,
        horizon: match horizon {
            Horizon::Infinite => json!("inf"),
            Horizon::Finite(t) => json!(t),
        },
        weights,
        tau_r: kernel_time_scale(bath, damping).value,
        velocity_coeff: coeffs.velocity,
        position_coeff: coeffs.position,
        perturbative: damping.is_perturbative(bath),
    })
}

fn resolve_weights(r: &mut Resolver) -> Result<WeightsReport, CliError> {
    let bath = bath(r)?;
    let damping = damping(r)?;
    let horizon: Horizon = r.required("horizon")?;
    weights_report(&bath, &damping, horizon)
}

pub fn weights(r: &mut Resolver, out: &mut OutputDir) -> Result<(), CliError> {
    let report = resolve_weights(r)?;
    out.write_json("weights.json", &report)
}

fn builtin_signal(name: &str, grid: TimeGrid, w: f64) -> Option<Trajectory> {
    Some(match name {
        "cos" => Trajectory::from_fn_with_velocity(
            grid,
            move |t| (w * t).cos(),
            move |t| -w * (w * t).sin(),
        ),
        "sin" => Trajectory::from_fn_with_velocity(
            grid,
            move |t| (w * t).sin(),
            move |t| w * (w * t).cos(),
        ),
        "const" => Trajectory::from_fn_with_velocity(grid, |_| 1.0, |_| 0.0),
        "zero" => Trajectory::zeros(grid),
        _ => return None,
    })
}

fn read_trajectory(path: &str) -> Result<Trajectory, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::validation(format!("cannot read trajectory {path}: {e}")))?;
    read_trajectory_csv(std::io::BufReader::new(file))
        .map_err(|e| CliError::validation(format!("{path}: {e}")))
}

pub fn convolve(r: &mut Resolver, out: &mut OutputDir) -> Result<(), CliError> {
    let kernel = r.raw("kernel").unwrap_or_default();
    let bath = bath(r)?;
    let damping = damping(r)?;
    let traj = match r.raw("input") {
        Some(path) => read_trajectory(&path)?,
        None => {
            let signal = r.raw("signal").unwrap_or_default();
            let w = r.number("omega_0")?;
            let dt = r.optional_number("dt")?.unwrap_or(0.05 / bath.omega_cut);
            let grid = TimeGrid::covering(dt, r.number("t_max")?)?;
            builtin_signal(&signal, grid, w)
                .filter(|_| signal != "zero")
                .ok_or_else(|| {
                    CliError::validation(format!("unknown signal '{signal}' (cos, sin or const)"))
                })?
        }
    };
    let (exact, markov) = if kernel == "dissipative" {
        let zero = Trajectory::zeros(traj.grid);
        (
            dissipative_pair_convolution(&traj, &zero, &bath, &damping, Mode::Exact)?,
            dissipative_pair_convolution(&traj, &zero, &bath, &damping, Mode::Markov)?,
        )
    } else {
        let kind: KernelKind = kernel
            .parse()
            .map_err(|e: memkernel::Error| CliError::validation(e.to_string()))?;
        let grid = traj.grid;
        let eval =
            KernelEval::on_lags(kind, Method::Closed, grid.dt, grid.n_steps, &bath, &damping)?;
        let weight = markov_weight(kind, &bath, &damping, Horizon::Infinite)?;
        (
            volterra_convolve(&eval, &traj)?,
            markov_convolve(&traj, weight),
        )
    };
    let cut = r
        .optional_number("transient_cut")?
        .unwrap_or_else(|| default_transient_cut(&bath, &damping));
    let report = convolution_error_report(&exact, &markov, cut)?;
    out.write("convolution_exact.csv", |w| {
        Ok(write_convolution_csv(w, &exact)?)
    })?;
    out.write("convolution_markov.csv", |w| {
        Ok(write_convolution_csv(w, &markov)?)
    })?;
    out.write_json("error_report.json", &report)
}

pub fn influence(r: &mut Resolver, out: &mut OutputDir) -> Result<(), CliError> {
    let bath = bath(r)?;
    let damping = damping(r)?;
    let hbar = r.number("hbar")?;
    let specs = [
        r.raw("q1").unwrap_or_default(),
        r.raw("q2").unwrap_or_default(),
    ];
    let is_builtin = |s: &str| matches!(s, "cos" | "sin" | "const" | "zero");

    let mut files: Vec<Option<Trajectory>> = Vec::new();
    for s in &specs {
        files.push(if is_builtin(s) {
            None
        } else {
            Some(read_trajectory(s)?)
        });
    }
    let grid = match files.iter().flatten().next() {
        Some(t) => t.grid,
        None => TimeGrid::covering(r.number("dt")?, r.number("t_max")?)?,
    };
    let w = if specs
        .iter()
        .any(|s| is_builtin(s) && s != "zero" && s != "const")
    {
        r.number("omega_0")?
    } else {
        0.0
    };
    let mut paths = Vec::new();
    for (s, file) in specs.iter().zip(files) {
        paths.push(match file {
            Some(t) => t,
            None => builtin_signal(s, grid, w).expect("built-in path"),
        });
    }
    let q2 = paths.pop().expect("two paths");
    let q1 = paths.pop().expect("two paths");
    let pair = PathPair::new(q1, q2)?;
    let total_time = r.optional_number("total_time")?.unwrap_or(grid.t_final());
    let parts = if damping.is_undamped() {
        standard_exponent(&pair, &bath, hbar)?
    } else {
        gamma_exponent(&pair, &bath, &damping, total_time, hbar)?
    };
    out.write_json(
        "exponent.json",
        &ExponentRecord::new(&parts, damping.gamma, total_time),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxSummary {
    pub mode: SimMode,
    pub eta: f64,
    pub omega_ratio: f64,
    pub gamma: f64,
    /// Friction coefficient of the equivalent Markov (memoryless) oscillator.
    pub markov_total: f64,
    pub max_step: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
}

struct RelaxRun {
    trajectory: Trajectory,
    summary: RelaxSummary,
    threshold: TailThreshold,
}

fn run_relax(r: &mut Resolver) -> Result<RelaxRun, CliError> {
    let mode: SimMode = r.required("mode")?;
    let eta = r.number("eta")?;
    let omega_ratio = r.number("omega_ratio")?;
    let gamma = r.number("gamma")?;
    let osc = OscillatorSpec::new(r.number("mass_0")?, 1.0)?;
    let kernel = FrictionKernel::new(
        &OhmicBath::natural(eta, omega_ratio)?,
        &MenskyDamping::new(gamma)?,
    )?;
    let limit = max_step(&osc, &kernel);
    let dt = r.optional_number("dt")?.unwrap_or(limit);
    let grid = TimeGrid::covering(dt, r.number("t_max")?)?;
    let (q0, v0) = (r.number("q0")?, r.number("v0")?);
    let trajectory = simulate(mode, &osc, &kernel, grid, q0, v0)?;
    let v = trajectory.velocity();
    let last = grid.n_steps - 1;
    let threshold = match r.optional_number("tail_threshold")? {
        Some(x) => TailThreshold::Absolute(x),
        None => TailThreshold::RmsMultiple(r.number("tail_multiple")?),
    };
    let summary = RelaxSummary {
        mode,
        eta,
        omega_ratio,
        gamma,
        markov_total: kernel.markov_total(),
        max_step: limit,
        dt: grid.dt,
        n_steps: grid.n_steps,
        initial_energy: osc.energy(q0, v0),
        final_energy: osc.energy(trajectory.q[last], v[last]),
    };
    Ok(RelaxRun {
        trajectory,
        summary,
        threshold,
    })
}

pub fn relax(r: &mut Resolver, out: &mut OutputDir) -> Result<(), CliError> {
    let run = run_relax(r)?;
    let stride: usize = r.required("stride")?;
    let analyze: bool = r.required("analyze")?;
    out.write("trajectory.csv", |w| {
        Ok(write_trajectory_csv(w, &run.trajectory, stride)?)
    })?;
    out.write_json("relax_summary.json", &run.summary)?;
    if analyze {
        let analysis = analyze_decay(&run.trajectory, run.threshold)?;
        out.write_json("decay_analysis.json", &analysis)?;
    }
    Ok(())
}

pub fn audit_preset(name: &str) -> Result<BTreeMap<String, String>, CliError> {
    match name {
        "paper" => {
            let p = AuditInput::reference_preset();
            Ok(BTreeMap::from([
                ("eta".to_string(), fmt_float(p.eta)),
                ("gamma".to_string(), fmt_float(p.gamma)),
                ("omega".to_string(), fmt_float(p.omega_cut)),
                ("mass_b".to_string(), fmt_float(p.mass_b)),
            ]))
        }
        other => Err(CliError::validation(format!(
            "unknown preset '{other}' (available: paper)"
        ))),
    }
}

pub fn audit_run(r: &mut Resolver, out: &mut OutputDir) -> Result<(), CliError> {
    let input = AuditInput {
        eta: r.number("eta")?,
        gamma: r.number("gamma")?,
        omega_cut: r.number("omega")?,
        mass_b: r.number("mass_b")?,
        omega_0: r.optional_number("omega_0")?,
    };
    let hbar = r.number("hbar")?;
    let report = audit(&input, &PhysicalConstants { hbar })?;
    out.write("audit.json", |w| {
        use std::io::Write;
        writeln!(w, "{}", report.to_json())?;
        Ok(())
    })
}

#[derive(Debug, Clone)]
struct PointResult {
    tau_r: f64,
    velocity_coeff: f64,
    position_coeff: f64,
    gamma_over_eta: f64,
    omega_over_gamma: f64,
    analysis: Option<DecayAnalysis>,
}

fn run_point(target: &str, r: &mut Resolver, dir: &Path) -> Result<PointResult, CliError> {
    let mut out = OutputDir::create(dir)?;
    let (weights, analysis) = match target {
        "weights" => (resolve_weights(r)?, None),
        "relax" => {
            let run = run_relax(r)?;
            let bath = OhmicBath::natural(run.summary.eta, run.summary.omega_ratio)?;
            let damping = MenskyDamping::new(run.summary.gamma)?;
            let weights = weights_report(&bath, &damping, Horizon::Infinite)?;
            let analysis = analyze_decay(&run.trajectory, run.threshold)?;
            out.write_json("relax_summary.json", &run.summary)?;
            out.write_json("decay_analysis.json", &analysis)?;
            (weights, Some(analysis))
        }
        other => {
            return Err(CliError::validation(format!(
                "unknown sweep target '{other}' (weights or relax)"
            )))
        }
    };
    out.write_json("weights.json", &weights)?;
    out.write_json("point.json", r.resolved())?;
    Ok(PointResult {
        tau_r: weights.tau_r,
        velocity_coeff: weights.velocity_coeff,
        position_coeff: weights.position_coeff,
        gamma_over_eta: weights.gamma / weights.eta,
        omega_over_gamma: weights.omega_cut / weights.gamma,
        analysis,
    })
}

pub fn point_dir_name(index: usize) -> String {
    format!("point-{index:04}")
}

/// Sweep over the axes; `base` holds the sweep's own flags and file values
/// restricted to the keys of the target subcommand.
pub fn sweep(
    r: &mut Resolver,
    base_flags: &BTreeMap<String, String>,
    base_file: &BTreeMap<String, String>,
    out: &mut OutputDir,
) -> Result<(), CliError> {
    let target = r.raw("target").unwrap_or_default();
    let target_spec = match target.as_str() {
        "weights" | "relax" => spec(&target).expect("known subcommand"),
        other => {
            return Err(CliError::validation(format!(
                "unknown sweep target '{other}' (weights or relax)"
            )))
        }
    };
    let axes_text = r
        .raw("axes")
        .ok_or_else(|| CliError::validation("a sweep needs at least one --axis"))?;
    let defs: Vec<&str> = axes_text.split(';').map(str::trim).collect();
    let axes = parse_axes(&defs)?;
    let jobs: Option<usize> = r.optional("jobs")?;
    if jobs == Some(0) {
        return Err(CliError::validation("jobs must be >= 1"));
    }

    let target_keys =
        |k: &str| k != "out" && k != "units" && target_spec.params.iter().any(|p| p.key == k);
    for key in base_flags.keys().chain(base_file.keys()) {
        if !matches!(key.as_str(), "target" | "axes" | "jobs" | "out" | "units")
            && !target_keys(key)
        {
            return Err(CliError::validation(format!(
                "parameter '{key}' does not apply to sweep target {target}"
            )));
        }
    }
    for axis in &axes {
        if !target_keys(&axis.name) || matches!(axis.name.as_str(), "mode" | "horizon") {
            return Err(CliError::validation(format!(
                "'{}' is not a numeric parameter of sweep target {target}",
                axis.name
            )));
        }
    }
    let pick = |m: &BTreeMap<String, String>| -> BTreeMap<String, String> {
        m.iter()
            .filter(|(k, _)| target_keys(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    };
    let (flags, file) = (pick(base_flags), pick(base_file));

    let points = grid_points(&axes);
    let root = out.path().to_path_buf();
    let work = || {
        points
            .par_iter()
            .enumerate()
            .map(|(i, point)| {
                let mut pr = Resolver::new(target_spec.params, flags.clone(), file.clone())?;
                for (name, value) in point {
                    pr.set(name, fmt_float(*value));
                }
                run_point(&target, &mut pr, &root.join(point_dir_name(i)))
            })
            .collect::<Vec<_>>()
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Output(format!("cannot start worker pool: {e}")))?;
    let results = pool.install(work);
    // Report the failure of the lowest-numbered point, whatever the
    // completion order was.
    let results: Vec<PointResult> = results.into_iter().collect::<Result<_, _>>()?;

    let axis_names: Vec<&str> = axes.iter().map(|a| a.name.as_str()).collect();
    out.write("summary.csv", |w| {
        let mut csv = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let mut header = vec!["index", "point"];
        header.extend(&axis_names);
        header.extend([
            "tau_r",
            "velocity_coeff",
            "position_coeff",
            "gamma_over_eta",
            "omega_over_gamma",
            "tail_residual",
            "classification",
        ]);
        csv.write_record(&header).map_err(csv_error)?;
        for (i, (point, res)) in points.iter().zip(&results).enumerate() {
            let mut row = vec![i.to_string(), point_dir_name(i)];
            row.extend(point.iter().map(|(_, v)| fmt_float(*v)));
            row.extend(
                [
                    res.tau_r,
                    res.velocity_coeff,
                    res.position_coeff,
                    res.gamma_over_eta,
                    res.omega_over_gamma,
                ]
                .map(fmt_float),
            );
            match &res.analysis {
                Some(a) => {
                    row.push(fmt_float(a.tail_residual));
                    row.push(
                        serde_json::to_value(a.classification)
                            .expect("enum")
                            .as_str()
                            .unwrap_or("")
                            .to_string(),
                    );
                }
                None => row.extend([String::new(), String::new()]),
            }
            csv.write_record(&row).map_err(csv_error)?;
        }
        csv.flush()?;
        Ok(())
    })?;
    for i in 0..points.len() {
        out.record(point_dir_name(i));
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Output(e.to_string())
}
