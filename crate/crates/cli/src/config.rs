//! Plain-text `key = value` configuration files and parameter resolution.
//!
//! A config file holds one `key = value` pair per line. Blank lines and
//! lines starting with `#` are ignored, as is anything after a `#` that
//! follows whitespace. Keys are lower-case identifiers (`tau_max`); the same
//! parameter is spelled `--tau-max` on the command line.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::CliError;

/// Parsed config file: key to raw value, in key order.
pub type ConfigMap = BTreeMap<String, String>;

fn valid_key(key: &str) -> bool {
    let mut chars = key.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

fn strip_comment(line: &str) -> &str {
    if line.trim_start().starts_with('#') {
        return "";
    }
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && i > 0 && bytes[i - 1].is_ascii_whitespace() {
            return &line[..i];
        }
    }
    line
}

/// Parses a config file. Duplicate keys, malformed lines and empty values
/// are errors carrying the 1-based line number.
pub fn parse_config(text: &str) -> Result<ConfigMap, CliError> {
    let mut map = ConfigMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::config(line_no, format!("expected 'key = value', got '{line}'"))
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !valid_key(key) {
            return Err(CliError::config(line_no, format!("invalid key '{key}'")));
        }
        if value.is_empty() {
            return Err(CliError::config(
                line_no,
                format!("empty value for '{key}'"),
            ));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(CliError::config(line_no, format!("duplicate key '{key}'")));
        }
    }
    Ok(map)
}

/// One resolvable parameter of a subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub help: &'static str,
    /// Default as text; `None` means optional (or required, at the caller's
    /// discretion).
    pub default: Option<&'static str>,
    /// Boolean switch (`--analyze`) rather than a valued flag.
    pub switch: bool,
}

impl Param {
    pub const fn value(
        key: &'static str,
        help: &'static str,
        default: Option<&'static str>,
    ) -> Self {
        Param {
            key,
            help,
            default,
            switch: false,
        }
    }

    pub const fn switch(key: &'static str, help: &'static str) -> Self {
        Param {
            key,
            help,
            default: Some("false"),
            switch: true,
        }
    }

    /// Command-line spelling of the key.
    pub fn flag(&self) -> String {
        self.key.replace('_', "-")
    }
}

/// Resolves parameters with the precedence flag > config file > preset >
/// default, and records every value it hands out.
#[derive(Debug, Clone, Default)]
pub struct Resolver {
    flags: BTreeMap<String, String>,
    file: ConfigMap,
    preset: BTreeMap<String, String>,
    defaults: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    /// `params` lists every key the subcommand understands; file keys outside
    /// it are rejected.
    pub fn new(
        params: &[Param],
        flags: BTreeMap<String, String>,
        file: ConfigMap,
    ) -> Result<Self, CliError> {
        if let Some(unknown) = file
            .keys()
            .find(|k| !params.iter().any(|p| p.key == k.as_str()))
        {
            return Err(CliError::validation(format!(
                "unknown config key '{unknown}' for this subcommand"
            )));
        }
        let defaults = params
            .iter()
            .filter_map(|p| p.default.map(|d| (p.key.to_string(), d.to_string())))
            .collect();
        Ok(Resolver {
            flags,
            file,
            preset: BTreeMap::new(),
            defaults,
            resolved: BTreeMap::new(),
        })
    }

    /// Values used when neither a flag nor the file sets a key.
    pub fn with_preset(mut self, preset: BTreeMap<String, String>) -> Self {
        self.preset = preset;
        self
    }

    /// Replaces a value regardless of its source (used for sweep axes).
    pub fn set(&mut self, key: &str, value: String) {
        self.flags.insert(key.to_string(), value);
    }

    fn lookup(&self, key: &str) -> Option<&String> {
        self.flags
            .get(key)
            .or_else(|| self.file.get(key))
            .or_else(|| self.preset.get(key))
            .or_else(|| self.defaults.get(key))
    }

    /// Raw value, if any source provides one.
    pub fn raw(&mut self, key: &str) -> Option<String> {
        let value = self.lookup(key).cloned()?;
        self.resolved.insert(key.to_string(), value.clone());
        Some(value)
    }

    pub fn optional<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(text) => text.parse().map(Some).map_err(|e| {
                CliError::validation(format!("invalid value '{text}' for '{key}': {e}"))
            }),
        }
    }

    pub fn required<T: FromStr>(&mut self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.optional(key)?
            .ok_or_else(|| CliError::validation(format!("missing required parameter '{key}'")))
    }

    /// A value that must be finite.
    pub fn number(&mut self, key: &str) -> Result<f64, CliError> {
        let x: f64 = self.required(key)?;
        finite(key, x)
    }

    pub fn optional_number(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        self.optional::<f64>(key)?
            .map(|x| finite(key, x))
            .transpose()
    }

    /// Every value handed out so far, for the manifest.
    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }

    /// Whether a key was set explicitly (flag, file or preset).
    pub fn is_explicit(&self, key: &str) -> bool {
        self.flags.contains_key(key) || self.file.contains_key(key) || self.preset.contains_key(key)
    }
}

fn finite(key: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::validation(format!(
            "'{key}' must be finite, got {x}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let map =
            parse_config("# header\n eta = 0.5 # friction\n\nomega=100\nout = runs/#1\n").unwrap();
        assert_eq!(map["eta"], "0.5");
        assert_eq!(map["omega"], "100");
        assert_eq!(map["out"], "runs/#1");
        assert_eq!(map.len(), 3);
    }

    #[test]
    fn rejects_malformed_lines() {
        for (text, line) in [
            ("eta 0.5\n", 1),
            ("eta = 1\neta = 2\n", 2),
            ("\n\nEta = 1\n", 3),
            ("eta =\n", 1),
            ("= 3\n", 1),
            ("2x = 3\n", 1),
        ] {
            match parse_config(text) {
                Err(CliError::Config { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn precedence_is_flag_file_preset_default() {
        let params = [
            Param::value("a", "", Some("1")),
            Param::value("b", "", Some("1")),
            Param::value("c", "", Some("1")),
            Param::value("d", "", Some("1")),
        ];
        let flags = BTreeMap::from([("a".to_string(), "4".to_string())]);
        let file = parse_config("a = 3\nb = 3\n").unwrap();
        let preset = BTreeMap::from([
            ("a".to_string(), "2".to_string()),
            ("b".to_string(), "2".to_string()),
            ("c".to_string(), "2".to_string()),
        ]);
        let mut r = Resolver::new(&params, flags, file)
            .unwrap()
            .with_preset(preset);
        let got: Vec<f64> = ["a", "b", "c", "d"]
            .iter()
            .map(|k| r.number(k).unwrap())
            .collect();
        assert_eq!(got, [4.0, 3.0, 2.0, 1.0]);
        assert_eq!(r.resolved().len(), 4);
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let params = [Param::value("a", "", None)];
        let file = parse_config("b = 1\n").unwrap();
        assert!(matches!(
            Resolver::new(&params, BTreeMap::new(), file),
            Err(CliError::Validation(_))
        ));
    }

    #[test]
    fn bad_values_are_validation_errors() {
        let params = [
            Param::value("a", "", Some("x")),
            Param::value("b", "", Some("inf")),
        ];
        let mut r = Resolver::new(&params, BTreeMap::new(), ConfigMap::new()).unwrap();
        assert!(matches!(r.number("a"), Err(CliError::Validation(_))));
        assert!(matches!(r.number("b"), Err(CliError::Validation(_))));
        assert!(matches!(r.number("missing"), Err(CliError::Validation(_))));
    }
}
