//! Batch front-end for the memkernel toolkit.
//!
//! Every subcommand reads its parameters from flags and/or a `key = value`
//! config file (`--config`), writes plot-ready CSV/JSON into an output
//! directory and records the resolved parameters in `manifest.json`.
//!
//! Exit status: 0 on success, 2 for invalid input or an unusable output
//! directory, 3 when a computation fails numerically.

// Guards such as `!(x > 0.0)` are written that way on purpose: they also
// reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod axis;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgAction, ArgMatches, Command};

use commands::{CommandSpec, COMMANDS};
use config::{parse_config, ConfigMap, Resolver};
use error::CliError;
use memkernel::units::UnitMode;
use output::{Manifest, OutputDir, DEFAULT_OUT, MANIFEST, OUT_ENV};

/// The command-line interface, built from the subcommand parameter tables so
/// that every config key has a matching flag.
pub fn cli() -> Command {
    let mut cmd = Command::new("memkernel")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Memory kernels, Markov diagnostics and the measured-bath audit for ohmic quantum Brownian motion")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for spec in COMMANDS {
        let mut sub = Command::new(spec.name).about(spec.about).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("key = value config file; flags override its values"),
        );
        for p in spec.params {
            let arg = if p.key == "axes" {
                Arg::new(p.key)
                    .long("axis")
                    .value_name("DEF")
                    .action(ArgAction::Append)
                    .help("Sweep axis name=log:a:b:n | lin:a:b:n | list:v1,v2,... (repeat for a second axis)")
            } else if p.switch {
                Arg::new(p.key)
                    .long(p.flag())
                    .action(ArgAction::SetTrue)
                    .help(p.help)
            } else {
                let help = match p.default {
                    Some(d) => format!("{} [default: {d}]", p.help),
                    None => p.help.to_string(),
                };
                Arg::new(p.key)
                    .long(p.flag())
                    .value_name("VALUE")
                    .allow_negative_numbers(true)
                    .help(help)
            };
            sub = sub.arg(arg);
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn flag_values(spec: &CommandSpec, m: &ArgMatches) -> BTreeMap<String, String> {
    let mut flags = BTreeMap::new();
    for p in spec.params {
        if p.key == "axes" {
            if let Some(defs) = m.get_many::<String>(p.key) {
                flags.insert(
                    p.key.to_string(),
                    defs.cloned().collect::<Vec<_>>().join(";"),
                );
            }
        } else if p.switch {
            if m.get_flag(p.key) {
                flags.insert(p.key.to_string(), "true".to_string());
            }
        } else if let Some(v) = m.get_one::<String>(p.key) {
            flags.insert(p.key.to_string(), v.clone());
        }
    }
    flags
}

fn load_config(path: Option<&Path>) -> Result<ConfigMap, CliError> {
    match path {
        None => Ok(ConfigMap::new()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::validation(format!("cannot read config file {}: {e}", p.display()))
            })?;
            parse_config(&text)
        }
    }
}

/// Output directory: `--out`, then `MEMKERNEL_OUT`, then the config file,
/// then the default.
fn output_root(r: &mut Resolver, flags: &BTreeMap<String, String>) -> PathBuf {
    let chosen = match (flags.get("out"), std::env::var(OUT_ENV)) {
        (Some(flag), _) => flag.clone(),
        (None, Ok(env)) if !env.is_empty() => env,
        _ => r.raw("out").unwrap_or_else(|| DEFAULT_OUT.to_string()),
    };
    r.set("out", chosen.clone());
    r.raw("out");
    PathBuf::from(chosen)
}

/// Runs an already parsed invocation; returns the output directory.
pub fn execute(matches: &ArgMatches) -> Result<PathBuf, CliError> {
    let (name, m) = matches
        .subcommand()
        .ok_or_else(|| CliError::validation("no subcommand given"))?;
    let spec = commands::spec(name)
        .ok_or_else(|| CliError::validation(format!("unknown subcommand '{name}'")))?;
    let config_path = m.get_one::<String>("config").map(PathBuf::from);
    let file = load_config(config_path.as_deref())?;
    let flags = flag_values(spec, m);

    let mut resolver = Resolver::new(spec.params, flags.clone(), file.clone())?;
    if name == "audit" {
        if let Some(preset) = resolver.raw("preset") {
            resolver = resolver.with_preset(commands::audit_preset(&preset)?);
        }
    }
    let units: UnitMode = resolver.required("units")?;
    if units != spec.units {
        return Err(CliError::validation(format!(
            "{name} works in {} units only, got {}",
            spec.units.as_str(),
            units.as_str()
        )));
    }
    let root = output_root(&mut resolver, &flags);
    let mut out = OutputDir::create(root)?;

    match name {
        "kernels" => commands::kernels(&mut resolver, &mut out)?,
        "weights" => commands::weights(&mut resolver, &mut out)?,
        "convolve" => commands::convolve(&mut resolver, &mut out)?,
        "influence" => commands::influence(&mut resolver, &mut out)?,
        "relax" => commands::relax(&mut resolver, &mut out)?,
        "audit" => commands::audit_run(&mut resolver, &mut out)?,
        "sweep" => commands::sweep(&mut resolver, &flags, &file, &mut out)?,
        other => {
            return Err(CliError::validation(format!(
                "unknown subcommand '{other}'"
            )))
        }
    }

    let manifest = Manifest::new(
        name,
        units.as_str(),
        config_path.as_deref(),
        &out,
        resolver.resolved().clone(),
    );
    out.write_json(MANIFEST, &manifest)?;
    Ok(out.path().to_path_buf())
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                error::EXIT_VALIDATION
            } else {
                0
            };
        }
    };
    match execute(&matches) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("memkernel: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interface_is_consistent() {
        cli().debug_assert();
    }

    #[test]
    fn every_subcommand_has_output_and_units() {
        for spec in COMMANDS {
            for key in ["out", "units"] {
                assert!(
                    spec.params.iter().any(|p| p.key == key),
                    "{} lacks {key}",
                    spec.name
                );
            }
        }
    }
}
