//! CSV and JSON emission of plot-ready data, and the trajectory CSV reader.
//!
//! Floats are written in their shortest round-trip form, so re-reading a
//! file reproduces every value bit for bit and identical runs produce
//! identical bytes.

use std::io::{Read, Write};

use serde::Serialize;

use crate::convolution::{ConvolutionResult, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::kernels::{KernelEval, MenskyDamping, OhmicBath};

/// Shortest decimal string that parses back to `x`.
///
/// Plain notation for magnitudes in `[1e-5, 1e16)`, scientific otherwise.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::from(io),
        other => Error::parse(line, format!("{other:?}")),
    }
}

fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header).map_err(csv_error)?;
    Ok(w)
}

/// Kernel table `tau,value,kind,method,eta,omega_cut,gamma`.
pub fn write_kernel_csv<W: Write>(
    out: W,
    eval: &KernelEval,
    bath: &OhmicBath,
    damping: &MenskyDamping,
) -> Result<()> {
    let mut w = writer(
        out,
        &[
            "tau",
            "value",
            "kind",
            "method",
            "eta",
            "omega_cut",
            "gamma",
        ],
    )?;
    let (eta, omega, gamma) = (
        fmt_float(bath.eta),
        fmt_float(bath.omega_cut),
        fmt_float(damping.gamma),
    );
    for (&tau, &value) in eval.taus.iter().zip(&eval.values) {
        w.write_record([
            fmt_float(tau).as_str(),
            fmt_float(value).as_str(),
            eval.kind.as_str(),
            eval.method.as_str(),
            &eta,
            &omega,
            &gamma,
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Convolution table `t,value,mode`.
pub fn write_convolution_csv<W: Write>(out: W, result: &ConvolutionResult) -> Result<()> {
    let mut w = writer(out, &["t", "value", "mode"])?;
    for (n, &v) in result.values.iter().enumerate() {
        w.write_record([
            fmt_float(result.grid.time(n)).as_str(),
            fmt_float(v).as_str(),
            result.mode.as_str(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Trajectory table `t,q,v`, keeping every `stride`-th sample (the first
/// sample is always kept). Without a velocity record the finite-difference
/// velocity is written.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory, stride: usize) -> Result<()> {
    if stride == 0 {
        return Err(Error::domain("stride must be >= 1"));
    }
    let v = traj.velocity();
    let mut w = writer(out, &["t", "q", "v"])?;
    for n in (0..traj.q.len()).step_by(stride) {
        w.write_record([
            fmt_float(traj.grid.time(n)),
            fmt_float(traj.q[n]),
            fmt_float(v[n]),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `t,q,v` (or `t,q`) table written by [`write_trajectory_csv`].
///
/// Times must start at 0 and be uniformly spaced to 1e-9 relative; all
/// values must be finite.
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Trajectory> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    let with_velocity = match header
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["t", "q", "v"] => true,
        ["t", "q"] => false,
        _ => {
            return Err(Error::parse(
                1,
                format!("expected header t,q,v or t,q, got {}", header.join(",")),
            ))
        }
    };
    let width = if with_velocity { 3 } else { 2 };

    let (mut t, mut q, mut v) = (Vec::new(), Vec::new(), Vec::new());
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(csv_error)?;
        if record.len() != width {
            return Err(Error::parse(
                line,
                format!("expected {width} fields, got {}", record.len()),
            ));
        }
        let mut fields = [0.0; 3];
        for (slot, field) in fields.iter_mut().zip(record.iter()) {
            let x: f64 = field
                .parse()
                .map_err(|_| Error::parse(line, format!("not a number: '{field}'")))?;
            if !x.is_finite() {
                return Err(Error::parse(line, format!("non-finite value '{field}'")));
            }
            *slot = x;
        }
        t.push(fields[0]);
        q.push(fields[1]);
        v.push(fields[2]);
    }

    if t.len() < 2 {
        return Err(Error::parse(
            t.len() + 1,
            "a trajectory needs at least two samples",
        ));
    }
    if t[0] != 0.0 {
        return Err(Error::parse(2, "times must start at 0"));
    }
    let n = t.len();
    let dt = t[n - 1] / (n - 1) as f64;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::parse(n + 1, "times must increase"));
    }
    for (i, &ti) in t.iter().enumerate() {
        let expected = i as f64 * dt;
        if (ti - expected).abs() > 1e-9 * expected.max(dt) {
            return Err(Error::parse(
                i + 2,
                format!("non-uniform time step at t = {ti}"),
            ));
        }
    }
    let grid = TimeGrid::new(dt, n)?;
    if with_velocity {
        Trajectory::with_velocity(grid, q, v)
    } else {
        Trajectory::new(grid, q)
    }
}

/// Pretty JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Io(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}
