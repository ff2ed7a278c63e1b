//! Replays the fuzz seed corpus through the parsers with the same
//! invariants the fuzz targets check.

use std::fs;
use std::path::PathBuf;

use memkernel_cli::axis::{parse_axis, MAX_AXIS_POINTS};
use memkernel_cli::config::parse_config;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut seeds: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (path.display().to_string(), fs::read(&path).unwrap())
        })
        .collect();
    seeds.sort();
    assert!(!seeds.is_empty());
    seeds
}

#[test]
fn config_seeds() {
    let mut accepted = 0;
    for (name, data) in seeds("config") {
        if let Ok(map) = parse_config(std::str::from_utf8(&data).unwrap()) {
            accepted += 1;
            assert!(
                map.iter()
                    .all(|(k, v)| !k.is_empty() && !v.is_empty() && v.trim() == v),
                "{name}"
            );
        }
    }
    assert!(accepted > 0);
}

#[test]
fn axis_seeds() {
    let mut accepted = 0;
    for (name, data) in seeds("axis") {
        if let Ok(axis) = parse_axis(std::str::from_utf8(&data).unwrap()) {
            accepted += 1;
            assert!(
                !axis.values.is_empty() && axis.values.len() <= MAX_AXIS_POINTS,
                "{name}"
            );
            assert!(axis.values.iter().all(|v| v.is_finite()), "{name}");
        }
    }
    assert!(accepted > 0);
}

#[test]
fn trajectory_seeds() {
    let mut accepted = 0;
    for (name, data) in seeds("trajectory_csv") {
        if let Ok(traj) = memkernel::io::read_trajectory_csv(data.as_slice()) {
            accepted += 1;
            assert_eq!(traj.q.len(), traj.grid.n_steps, "{name}");
        }
    }
    assert!(accepted > 0);
}
