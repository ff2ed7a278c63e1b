//! Running the binary and validating the files it writes.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_memkernel"));
    cmd.env_remove("MEMKERNEL_OUT");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn run_in(out: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let out = out.to_str().unwrap();
    all.extend(["--out", out]);
    let output = run(&all);
    assert!(
        output.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

pub fn read_json(path: &Path) -> Value {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(
        text.ends_with('\n'),
        "{} lacks a final newline",
        path.display()
    );
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ty {
    Number,
    /// String or null.
    StrOrNull,
    Integer,
    Str,
    Bool,
    Object,
    Array,
    /// Number or the string "inf".
    Horizon,
    /// Optional number (key may be absent).
    OptNumber,
}

fn check(value: Option<&Value>, ty: Ty, key: &str, file: &str) {
    let ok = match (ty, value) {
        (Ty::OptNumber, None) => true,
        (_, None) => false,
        (Ty::Number | Ty::OptNumber, Some(v)) => v.as_f64().is_some_and(f64::is_finite),
        (Ty::StrOrNull, Some(v)) => v.is_null() || v.is_string(),
        (Ty::Integer, Some(v)) => v.as_u64().is_some(),
        (Ty::Str, Some(v)) => v.is_string(),
        (Ty::Bool, Some(v)) => v.is_boolean(),
        (Ty::Object, Some(v)) => v.is_object(),
        (Ty::Array, Some(v)) => v.is_array(),
        (Ty::Horizon, Some(v)) => v.as_str() == Some("inf") || v.as_f64().is_some(),
    };
    assert!(ok, "{file}: key '{key}' should be {ty:?}, got {value:?}");
}

/// Checks an object has exactly the listed keys (optional ones may be
/// missing) with the listed types.
pub fn assert_object(value: &Value, schema: &[(&str, Ty)], file: &str) {
    let obj = value
        .as_object()
        .unwrap_or_else(|| panic!("{file}: not an object"));
    let allowed: BTreeSet<&str> = schema.iter().map(|(k, _)| *k).collect();
    for key in obj.keys() {
        assert!(
            allowed.contains(key.as_str()),
            "{file}: unexpected key '{key}'"
        );
    }
    for (key, ty) in schema {
        check(obj.get(*key), *ty, key, file);
    }
}

pub fn validate_manifest(dir: &Path, subcommand: &str) -> Value {
    let m = read_json(&dir.join("manifest.json"));
    assert_object(
        &m,
        &[
            ("tool", Ty::Str),
            ("version", Ty::Str),
            ("subcommand", Ty::Str),
            ("units", Ty::Str),
            ("config_file", Ty::StrOrNull),
            ("out_dir", Ty::Str),
            ("parameters", Ty::Object),
            ("outputs", Ty::Array),
            ("created_unix", Ty::Integer),
        ],
        "manifest.json",
    );
    assert_eq!(m["tool"], "memkernel");
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["subcommand"], subcommand);
    assert!(m["parameters"]
        .as_object()
        .unwrap()
        .values()
        .all(Value::is_string));
    for file in m["outputs"].as_array().unwrap() {
        assert!(
            dir.join(file.as_str().unwrap()).exists(),
            "listed output {file} missing"
        );
    }
    m
}

/// Column kinds of a CSV schema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Col {
    Float,
    /// Float, or "inf"/"-inf".
    Extended,
    Int,
    Text,
    /// Possibly empty float.
    OptFloat,
    /// Possibly empty text.
    OptText,
}

/// Checks the header and every cell; returns the rows.
pub fn validate_csv(path: &Path, schema: &[(&str, Col)]) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(text.ends_with('\n'));
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().expect("header").split(',').collect();
    let expected: Vec<&str> = schema.iter().map(|(n, _)| *n).collect();
    assert_eq!(header, expected, "{}", path.display());
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<String> = line.split(',').map(str::to_string).collect();
        assert_eq!(
            cells.len(),
            schema.len(),
            "{} row {}",
            path.display(),
            i + 2
        );
        for (cell, (name, col)) in cells.iter().zip(schema) {
            let ok = match col {
                Col::Float => cell.parse::<f64>().is_ok_and(f64::is_finite),
                Col::Extended => cell.parse::<f64>().is_ok_and(|x| !x.is_nan()),
                Col::Int => cell.parse::<u64>().is_ok(),
                Col::Text => !cell.is_empty(),
                Col::OptText => true,
                Col::OptFloat => cell.is_empty() || cell.parse::<f64>().is_ok_and(f64::is_finite),
            };
            assert!(
                ok,
                "{} row {} column {name}: '{cell}'",
                path.display(),
                i + 2
            );
        }
        rows.push(cells);
    }
    assert!(!rows.is_empty(), "{} has no rows", path.display());
    rows
}

pub fn column(rows: &[Vec<String>], index: usize) -> Vec<f64> {
    rows.iter().map(|r| r[index].parse().unwrap()).collect()
}

pub const KERNEL_CSV: &[(&str, Col)] = &[
    ("tau", Col::Float),
    ("value", Col::Float),
    ("kind", Col::Text),
    ("method", Col::Text),
    ("eta", Col::Float),
    ("omega_cut", Col::Float),
    ("gamma", Col::Float),
];

pub const CONVOLUTION_CSV: &[(&str, Col)] = &[
    ("t", Col::Float),
    ("value", Col::Float),
    ("mode", Col::Text),
];

pub const TRAJECTORY_CSV: &[(&str, Col)] =
    &[("t", Col::Float), ("q", Col::Float), ("v", Col::Float)];

pub const WEIGHTS_JSON: &[(&str, Ty)] = &[
    ("eta", Ty::Number),
    ("omega_cut", Ty::Number),
    ("gamma", Ty::Number),
    ("horizon", Ty::Horizon),
    ("weights", Ty::Object),
    ("tau_r", Ty::Number),
    ("velocity_coeff", Ty::Number),
    ("position_coeff", Ty::Number),
    ("perturbative", Ty::Bool),
];

pub const DECAY_JSON: &[(&str, Ty)] = &[
    ("fitted_rate", Ty::Number),
    ("fit_window", Ty::Array),
    ("tail_residual", Ty::Number),
    ("classification", Ty::Str),
    ("fit_rms", Ty::Number),
    ("threshold", Ty::Number),
    ("peaks_in_fit", Ty::Integer),
    ("peaks_after_fit", Ty::Integer),
];

pub const RELAX_SUMMARY_JSON: &[(&str, Ty)] = &[
    ("mode", Ty::Str),
    ("eta", Ty::Number),
    ("omega_ratio", Ty::Number),
    ("gamma", Ty::Number),
    ("markov_total", Ty::Number),
    ("max_step", Ty::Number),
    ("dt", Ty::Number),
    ("n_steps", Ty::Integer),
    ("initial_energy", Ty::Number),
    ("final_energy", Ty::Number),
];

pub fn validate_weights(path: &Path) -> Value {
    let w = read_json(path);
    assert_object(&w, WEIGHTS_JSON, "weights.json");
    assert_object(
        &w["weights"],
        &[
            ("R", Ty::Number),
            ("I", Ty::Number),
            ("R_damped", Ty::Number),
            ("I_damped", Ty::Number),
        ],
        "weights.json/weights",
    );
    w
}

pub fn validate_decay(path: &Path) -> Value {
    let d = read_json(path);
    assert_object(&d, DECAY_JSON, "decay_analysis.json");
    assert!(matches!(
        d["classification"].as_str(),
        Some("exponential" | "tailed")
    ));
    assert_eq!(d["fit_window"].as_array().unwrap().len(), 2);
    d
}

pub fn validate_relax_summary(path: &Path) -> Value {
    let s = read_json(path);
    assert_object(&s, RELAX_SUMMARY_JSON, "relax_summary.json");
    assert!(matches!(s["mode"].as_str(), Some("memory" | "markov")));
    s
}

pub fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().expect("temporary directory")
}

pub const SUMMARY_TAIL: &[(&str, Col)] = &[
    ("tau_r", Col::Float),
    ("velocity_coeff", Col::Float),
    ("position_coeff", Col::Float),
    ("gamma_over_eta", Col::Float),
    ("omega_over_gamma", Col::Extended),
    ("tail_residual", Col::OptFloat),
    ("classification", Col::OptText),
];

/// Summary schema for a sweep over the named axes.
pub fn summary_schema(axes: &[&'static str]) -> Vec<(&'static str, Col)> {
    let mut schema = vec![("index", Col::Int), ("point", Col::Text)];
    schema.extend(axes.iter().map(|a| (*a, Col::Float)));
    schema.extend_from_slice(SUMMARY_TAIL);
    schema
}
