//! CSV and JSON encodings of partitions, trajectories and Yule paths.
//!
//! CSV floats carry 17 significant digits so every value round-trips; JSON
//! uses serde_json's shortest round-trip formatting.

use std::fmt::Write as _;

use serde::Serialize;

use crate::chains::ChainTrajectory;
use crate::error::{Error, Result};
use crate::partition::MassPartition;
use crate::yule::{YuleKind, YulePath};

/// Formats a float with 17 significant digits, positionally for moderate
/// magnitudes and in scientific notation otherwise.
pub fn format_f64(x: f64) -> String {
    let sci = format!("{x:.16e}");
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".to_string() } else { sci };
    }
    let exponent: i32 = sci.rsplit_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if (-5..16).contains(&exponent) {
        format!("{x:.*}", (16 - exponent).max(0) as usize)
    } else {
        sci
    }
}

/// Comma-separated masses in stored order.
pub fn csv_row(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format_f64(*v));
    }
    out
}

/// Parses one CSV row of floats.
pub fn parse_csv_floats(line: &str) -> Result<Vec<f64>> {
    line.trim()
        .split(',')
        .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{f:?}: {e}"))))
        .collect()
}

/// Parses a CSV row written by [`csv_row`] as a partition whose total is
/// the sum of its masses.
pub fn parse_partition_row(line: &str) -> Result<MassPartition> {
    MassPartition::from_masses(parse_csv_floats(line)?)
}

/// Trajectory CSV: one state per row, the step index first.
pub fn trajectory_csv<P>(t: &ChainTrajectory<P>, masses: impl Fn(&P) -> &[f64]) -> String {
    let mut out = String::new();
    for (step, s) in t.states.iter().enumerate() {
        let m = masses(s);
        if m.is_empty() {
            let _ = writeln!(out, "{step}");
        } else {
            let _ = writeln!(out, "{step},{}", csv_row(m));
        }
    }
    out
}

/// Yule path CSV: a comment naming the parameter, a header, then
/// `(jump_time, value)` rows starting with `(0, initial)`.
pub fn yule_path_csv(path: &YulePath) -> String {
    let mut out = String::new();
    match path.kind {
        YuleKind::Discrete { k } => {
            let _ = writeln!(out, "# k={k}");
        }
        YuleKind::Continuous { a } => {
            let _ = writeln!(out, "# a={a}");
        }
    }
    out.push_str("jump_time,value\n");
    let _ = writeln!(out, "{},{}", format_f64(0.0), format_f64(path.initial));
    for (t, v) in path.jump_times.iter().zip(&path.values) {
        let _ = writeln!(out, "{},{}", format_f64(*t), format_f64(*v));
    }
    out
}

/// Compact JSON encoding of any serializable value.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::run_frag_chain_k;
    use crate::distributions::sample_dirichlet_sym;
    use crate::partition::Validate;
    use crate::rng::RngStream;
    use crate::yule::{genealogy_marginal_cont, simulate_yule_counts};

    #[test]
    fn seventeen_digits_round_trip() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..10_000 {
            let x = rng.uniform() * 10f64.powi((rng.uniform() * 40.0) as i32 - 20);
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_f64(0.5), "0.50000000000000000");
        assert_eq!(format_f64(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(format_f64(12.5), "12.500000000000000");
        assert_eq!(format_f64(1e-9), "1.0000000000000001e-9");
        assert_eq!(format_f64(0.0), "0");
    }

    #[test]
    fn csv_partition_round_trip() {
        let mut rng = RngStream::new(2, 0);
        for _ in 0..200 {
            let x = sample_dirichlet_sym(5, 0.5, &mut rng).unwrap();
            let back = parse_partition_row(&csv_row(x.masses())).unwrap();
            assert_eq!(back.masses(), x.masses());
            assert!(back.is_valid());
        }
        assert!(parse_partition_row("0.5,abc").is_err());
    }

    #[test]
    fn trajectory_csv_layout() {
        let t = run_frag_chain_k(1, 2, RngStream::new(3, 0)).unwrap();
        let csv = trajectory_csv(&t, |s| s.masses());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("0,"));
        assert_eq!(lines[2].split(',').count(), 4);
    }

    #[test]
    fn trajectory_json_layout() {
        let t = run_frag_chain_k(1, 1, RngStream::new(3, 0)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&to_json(&t).unwrap()).unwrap();
        assert_eq!(v["k"], 1);
        assert_eq!(v["theta"], 0.0);
        assert_eq!(v["states"].as_array().unwrap().len(), 2);
        assert_eq!(v["events"][0]["step"], 0);
        assert!(v["events"][0]["I"].is_u64());
    }

    #[test]
    fn yule_csv_layout() {
        let p = simulate_yule_counts(1, 1.0, &mut RngStream::new(4, 0)).unwrap();
        let csv = yule_path_csv(&p);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("# k=1"));
        assert_eq!(lines.next(), Some("jump_time,value"));
        assert_eq!(lines.count(), p.jump_times.len() + 1);
    }

    #[test]
    fn genealogy_json_layout() {
        let g = genealogy_marginal_cont(1.0, 0.5, 1e-3, &mut RngStream::new(5, 0)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&to_json(&g).unwrap()).unwrap();
        for key in ["time", "total", "weights", "tail"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
