//! Trace serialization (CSV spectrograms, JSON manifests) and the
//! cross-solver comparison report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use pinemsim_core::protocols::ScenarioContext;
use pinemsim_core::tba::TraceRecord;

use crate::config::RunConfig;
use crate::CliError;

/// Render a trace as CSV: header `t,n=<n_min>,…,n=<n_max>,mean_x,variance_x`,
/// one row per sample, numbers in shortest round-trip decimal.
pub fn trace_to_csv(trace: &TraceRecord) -> String {
    let mut out = String::new();
    out.push('t');
    for n in trace.window.iter() {
        let _ = write!(out, ",n={n}");
    }
    out.push_str(",mean_x,variance_x\n");
    for (i, &t) in trace.times.iter().enumerate() {
        let _ = write!(out, "{t}");
        for p in &trace.spectra[i] {
            let _ = write!(out, ",{p}");
        }
        let _ = writeln!(out, ",{},{}", trace.mean_x[i], trace.variance_x[i]);
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Write one named trace and return the files created.
pub fn write_trace(
    trace: &TraceRecord,
    dir: &Path,
    name: &str,
    formats: &[String],
) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    if formats.iter().any(|f| f == "csv") {
        let path = dir.join(format!("{name}.csv"));
        write_file(&path, &trace_to_csv(trace))?;
        files.push(path);
    }
    Ok(files)
}

/// Derived lattice quantities echoed into every manifest.
pub fn derived_block(ctx: &ScenarioContext) -> serde_json::Value {
    let m = &ctx.model;
    json!({
        "gamma": ctx.beam.gamma,
        "beta": ctx.beam.beta,
        "velocity_um_per_fs": ctx.beam.velocity,
        "wavenumber_k0_per_um": ctx.beam.wavenumber_k0,
        "lattice_constant_rad_per_fs": m.lattice_constant,
        "detuning_rad_per_fs": m.detuning,
        "kappa_mag_per_fs": m.kappa_mag(),
        "kappa_arg_rad": m.hopping_kappa.arg(),
        // null marks the synchronized drive (infinite Bloch period)
        "bloch_period_fs": if m.bloch_period.is_finite() {
            serde_json::Value::from(m.bloch_period)
        } else {
            serde_json::Value::Null
        },
        "grating_period_um": ctx.drive.grating_period,
        "grating_wavevector_per_um": ctx.drive.grating_wavevector,
        "synchronized_frequency_rad_per_fs": ctx.drive.synchronized_frequency(&ctx.beam),
        "interaction_time_fs": ctx.interaction_time(),
    })
}

/// Write the run manifest: configuration echo, derived quantities, unit
/// declarations, file inventory, solver version, creation time.
pub fn write_manifest(
    config: &RunConfig,
    ctx: &ScenarioContext,
    dir: &Path,
    files: &[PathBuf],
    extra: serde_json::Value,
) -> Result<PathBuf, CliError> {
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = json!({
        "run": config,
        "derived": derived_block(ctx),
        "units": {
            "time": "fs",
            "length": "um",
            "energy": "eV",
            "angle": "rad",
            "angular_frequency": "rad/fs",
            "field": "V/um"
        },
        "files": files.iter().map(|p| p.file_name().unwrap().to_string_lossy().to_string()).collect::<Vec<_>>(),
        "solver_version": env!("CARGO_PKG_VERSION"),
        "created_unix": created,
        "results": extra,
    });
    let path = dir.join("manifest.json");
    write_file(&path, &serde_json::to_string_pretty(&manifest).unwrap())?;
    Ok(path)
}

/// Pointwise comparison of two traces on identical grids.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub solver_a: String,
    pub solver_b: String,
    /// √(Σ_{t,n} (P_a − P_b)²·Δt / T).
    pub l2_error: f64,
    /// max |P_a − P_b| over all samples and sites.
    pub linf_error: f64,
    /// max_n |P_a − P_b| per sample.
    pub per_time_errors: Vec<f64>,
}

pub fn compare_traces(
    a: &TraceRecord,
    b: &TraceRecord,
    label_a: &str,
    label_b: &str,
) -> Result<ComparisonReport, CliError> {
    if a.window != b.window {
        return Err(CliError::Config(format!(
            "grid mismatch: windows [{}, {}] vs [{}, {}]",
            a.window.n_min, a.window.n_max, b.window.n_min, b.window.n_max
        )));
    }
    if a.times.len() != b.times.len()
        || a.times
            .iter()
            .zip(&b.times)
            .any(|(x, y)| (x - y).abs() > 1e-12 * x.abs().max(1.0))
    {
        return Err(CliError::Config(
            "grid mismatch: sample times differ".into(),
        ));
    }
    let total = a.times.last().unwrap() - a.times[0];
    let dt = if a.times.len() > 1 {
        total / (a.times.len() - 1) as f64
    } else {
        1.0
    };
    let mut sum_sq = 0.0f64;
    let mut linf = 0.0f64;
    let mut per_time = Vec::with_capacity(a.times.len());
    for (ra, rb) in a.spectra.iter().zip(&b.spectra) {
        let mut row_max = 0.0f64;
        for (pa, pb) in ra.iter().zip(rb) {
            let d = (pa - pb).abs();
            sum_sq += d * d;
            row_max = row_max.max(d);
        }
        per_time.push(row_max);
        linf = linf.max(row_max);
    }
    let l2_error = if total > 0.0 {
        (sum_sq * dt / total).sqrt()
    } else {
        sum_sq.sqrt()
    };
    Ok(ComparisonReport {
        solver_a: label_a.to_string(),
        solver_b: label_b.to_string(),
        l2_error,
        linf_error: linf,
        per_time_errors: per_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pinemsim_core::tba::Window;

    fn tiny_trace() -> TraceRecord {
        let window = Window::new(-2, 2).unwrap();
        TraceRecord {
            window,
            times: vec![0.0, 0.5, 1.0],
            spectra: vec![
                vec![0.0, 0.2, 0.6, 0.2, 0.0],
                vec![0.1, 0.2, 0.4, 0.2, 0.1],
                vec![0.0, 0.2, 0.6, 0.2, 0.0],
            ],
            mean_x: vec![0.0, 0.0, 0.0],
            variance_x: vec![1.0, 2.0, 1.0],
            amplitudes_final: vec![],
            max_norm_error: 0.0,
        }
    }

    #[test]
    fn csv_shape() {
        let csv = trace_to_csv(&tiny_trace());
        let lines: Vec<&str> = csv.trim().lines().collect();
        assert_eq!(lines.len(), 4); // header + 3 samples
        assert_eq!(lines[0], "t,n=-2,n=-1,n=0,n=1,n=2,mean_x,variance_x");
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), 8);
        }
    }

    #[test]
    fn csv_round_trips_values() {
        let trace = tiny_trace();
        let csv = trace_to_csv(&trace);
        let second_row: Vec<f64> = csv
            .lines()
            .nth(2)
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(second_row[0], 0.5);
        let row_sum: f64 = second_row[1..6].iter().sum();
        assert!((row_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_traces_compare_to_zero() {
        let t = tiny_trace();
        let report = compare_traces(&t, &t, "a", "b").unwrap();
        assert_eq!(report.l2_error, 0.0);
        assert_eq!(report.linf_error, 0.0);
    }

    #[test]
    fn single_point_perturbation_sets_linf() {
        let a = tiny_trace();
        let mut b = tiny_trace();
        b.spectra[1][2] += 1e-3;
        let report = compare_traces(&a, &b, "a", "b").unwrap();
        assert!((report.linf_error - 1e-3).abs() < 1e-15);
        assert_eq!(report.per_time_errors[0], 0.0);
        assert!((report.per_time_errors[1] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = tiny_trace();
        let mut b = tiny_trace();
        b.times[1] = 0.6;
        assert!(compare_traces(&a, &b, "a", "b").is_err());
    }
}
