//! Output directory handling and the per-run manifest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::CliError;

/// Environment variable that overrides the configured output directory.
pub const OUT_ENV: &str = "MEMKERNEL_OUT";
/// Output directory when nothing else is configured.
pub const DEFAULT_OUT: &str = "memkernel-out";
pub const MANIFEST: &str = "manifest.json";

/// A directory that collects the files written by one run.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, CliError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| {
            CliError::Output(format!(
                "cannot create output directory {}: {e}",
                root.display()
            ))
        })?;
        Ok(OutputDir {
            root,
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Writes `name` through `fill` and records it.
    pub fn write<F>(&mut self, name: &str, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    {
        let path = self.root.join(name);
        let file = File::create(&path)
            .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        fill(&mut out)?;
        out.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, |out| Ok(memkernel::io::write_json(out, value)?))
    }

    /// Records a file written by someone else (a sweep point directory).
    pub fn record(&mut self, name: String) {
        self.files.push(name);
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

/// Provenance of a run. The creation time appears here and nowhere else,
/// so data files stay byte-identical across repeated runs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub units: String,
    pub config_file: Option<String>,
    pub out_dir: String,
    pub parameters: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub created_unix: u64,
}

impl Manifest {
    pub fn new(
        subcommand: &str,
        units: &str,
        config_file: Option<&Path>,
        out: &OutputDir,
        parameters: BTreeMap<String, String>,
    ) -> Self {
        Manifest {
            tool: "memkernel",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            units: units.to_string(),
            config_file: config_file.map(|p| p.display().to_string()),
            out_dir: out.path().display().to_string(),
            parameters,
            outputs: out.files().to_vec(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}
