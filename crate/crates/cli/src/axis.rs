//! Sweep-axis definitions: `name=log:a:b:n`, `name=lin:a:b:n` or
//! `name=list:v1,v2,...`.

use crate::error::CliError;

/// Largest number of points on one axis.
pub const MAX_AXIS_POINTS: usize = 200;
/// Largest number of axes in one sweep.
pub const MAX_AXES: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

fn number(text: &str, what: &str) -> Result<f64, CliError> {
    let x: f64 = text
        .trim()
        .parse()
        .map_err(|_| CliError::validation(format!("axis {what}: '{text}' is not a number")))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::validation(format!(
            "axis {what} must be finite, got '{text}'"
        )))
    }
}

fn count(text: &str) -> Result<usize, CliError> {
    let n: usize = text.trim().parse().map_err(|_| {
        CliError::validation(format!(
            "axis point count '{text}' is not a non-negative integer"
        ))
    })?;
    check_len(n)?;
    Ok(n)
}

fn check_len(n: usize) -> Result<(), CliError> {
    if n == 0 {
        Err(CliError::validation("empty sweep axis"))
    } else if n > MAX_AXIS_POINTS {
        Err(CliError::validation(format!(
            "sweep axis has {n} points, more than the limit of {MAX_AXIS_POINTS}"
        )))
    } else {
        Ok(())
    }
}

fn spaced(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    if n == 1 {
        return vec![f(0.0)];
    }
    (0..n)
        .map(|i| {
            let u = i as f64 / (n - 1) as f64;
            if i == n - 1 {
                f(1.0)
            } else {
                f(u)
            }
        })
        .map(|x| x.clamp(a.min(b), a.max(b)))
        .collect()
}

/// Parses one axis definition.
pub fn parse_axis(text: &str) -> Result<Axis, CliError> {
    let (name, spec) = text.split_once('=').ok_or_else(|| {
        CliError::validation(format!("axis '{text}' must look like name=kind:..."))
    })?;
    let name = name.trim();
    let valid = matches!(name.chars().next(), Some(c) if c.is_ascii_lowercase())
        && name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
    if !valid {
        return Err(CliError::validation(format!("invalid axis name '{name}'")));
    }
    let (kind, rest) = spec.trim().split_once(':').ok_or_else(|| {
        CliError::validation(format!("axis '{name}' needs a kind: log, lin or list"))
    })?;

    let values = match kind {
        "log" | "lin" => {
            let parts: Vec<&str> = rest.split(':').collect();
            let [a, b, n] = parts.as_slice() else {
                return Err(CliError::validation(format!(
                    "axis '{name}': expected {kind}:start:stop:count"
                )));
            };
            let (a, b, n) = (number(a, "start")?, number(b, "stop")?, count(n)?);
            if kind == "log" {
                if !(a > 0.0 && b > 0.0) {
                    return Err(CliError::validation(format!(
                        "axis '{name}': log bounds must be > 0"
                    )));
                }
                let (la, lb) = (a.ln(), b.ln());
                spaced(a, b, n, |u| {
                    if u == 0.0 {
                        a
                    } else if u == 1.0 {
                        b
                    } else {
                        (la + u * (lb - la)).exp()
                    }
                })
            } else {
                spaced(a, b, n, |u| if u == 1.0 { b } else { a + u * (b - a) })
            }
        }
        "list" => {
            let values = if rest.trim().is_empty() {
                Vec::new()
            } else {
                rest.split(',')
                    .map(|v| number(v, "value"))
                    .collect::<Result<Vec<_>, _>>()?
            };
            check_len(values.len())?;
            values
        }
        other => {
            return Err(CliError::validation(format!(
                "axis '{name}': unknown kind '{other}' (expected log, lin or list)"
            )))
        }
    };
    Ok(Axis {
        name: name.to_string(),
        values,
    })
}

/// Parses a set of axes and checks the count and name uniqueness.
pub fn parse_axes<S: AsRef<str>>(defs: &[S]) -> Result<Vec<Axis>, CliError> {
    if defs.is_empty() || defs.len() > MAX_AXES {
        return Err(CliError::validation(format!(
            "a sweep needs 1 to {MAX_AXES} axes, got {}",
            defs.len()
        )));
    }
    let axes: Vec<Axis> = defs
        .iter()
        .map(|d| parse_axis(d.as_ref()))
        .collect::<Result<_, _>>()?;
    if axes.len() == 2 && axes[0].name == axes[1].name {
        return Err(CliError::validation(format!(
            "axis '{}' given twice",
            axes[0].name
        )));
    }
    Ok(axes)
}

/// Grid points in row-major order (last axis fastest), as `(name, value)` lists.
pub fn grid_points(axes: &[Axis]) -> Vec<Vec<(String, f64)>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push((axis.name.clone(), v));
                    p
                })
            })
            .collect();
    }
    points
}
