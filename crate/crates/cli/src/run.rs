//! Scenario dispatch: execute the configured run and write its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use pinemsim_core::Complex64 as C64;

use pinemsim_core::protocols::{
    run_acceleration, run_bloch_oscillation, run_breathing, run_detuning_sweep, run_diffraction,
    run_lensing, run_refraction, run_talbot, LensingPath, ModulationStep, ScenarioContext,
    SolverKind, SweepRow, TalbotInput,
};
use pinemsim_core::tba::{SidebandState, Window};

use crate::config::{MethodConfig, RunConfig, ScenarioConfig};
use crate::output::{write_manifest, write_trace};
use crate::CliError;

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.display().to_string(),
        source: e,
    })
}

/// Sweep rows rendered as CSV.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("detuning,bloch_period,final_mean_x,final_spread,max_spread\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.detuning, r.bloch_period, r.final_mean_x, r.final_spread, r.max_spread
        ));
    }
    out
}

/// Run the configured scenario, write traces and the manifest into the
/// output directory, and return the list of files written.
pub fn execute(
    config: &RunConfig,
    ctx: &ScenarioContext,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(dir)?;
    let samples = config.output.samples;
    let formats = &config.output.formats;
    let solver: SolverKind = config.solver.kind.into();
    let settings = (&config.solver.grid).into();
    let kind = config.scenario.kind_name();

    let mut files = Vec::new();
    let mut results = json!({});

    match &config.scenario {
        ScenarioConfig::Breathing { periods } => {
            let out = run_breathing(ctx, *periods, samples, solver, &settings)?;
            for (s, trace) in &out.traces {
                files.extend(write_trace(
                    trace,
                    dir,
                    &format!("{kind}_{}", s.label()),
                    formats,
                )?);
            }
            results = json!({
                "max_norm_error": out.traces.iter().map(|(_, t)| t.max_norm_error).fold(0.0, f64::max),
            });
        }
        ScenarioConfig::BlochOscillation {
            sigma_en_over_lattice,
            periods,
        } => {
            let sigma = sigma_en_over_lattice * ctx.model.lattice_constant;
            let out = run_bloch_oscillation(ctx, sigma, *periods, samples, solver, &settings)?;
            for (s, trace) in &out.traces {
                files.extend(write_trace(
                    trace,
                    dir,
                    &format!("{kind}_{}", s.label()),
                    formats,
                )?);
            }
            results = json!({ "sigma_en_rad_per_fs": sigma });
        }
        ScenarioConfig::DetuningSweep { detunings } => {
            let rows = run_detuning_sweep(ctx, detunings, samples)?;
            if formats.iter().any(|f| f == "csv") {
                let path = dir.join("sweep.csv");
                fs::write(&path, sweep_to_csv(&rows)).map_err(|e| CliError::Io {
                    path: path.display().to_string(),
                    source: e,
                })?;
                files.push(path);
            }
            results = json!({
                "points": rows.len(),
                "interaction_time_fs": ctx.interaction_time(),
            });
        }
        ScenarioConfig::Acceleration {
            cycles,
            method,
            sigma_en_over_lattice,
        } => {
            let sigma = sigma_en_over_lattice * ctx.model.lattice_constant;
            let method = match method {
                MethodConfig::PhaseFlip => pinemsim_core::protocols::SwitchMethod::PhaseFlip,
                MethodConfig::DetuningFlip => pinemsim_core::protocols::SwitchMethod::DetuningFlip,
            };
            let out = run_acceleration(ctx, *cycles, method, sigma, samples)?;
            files.extend(write_trace(&out.trace, dir, kind, formats)?);
            // longitudinal density over one optical cycle per half period
            if formats.iter().any(|f| f == "csv") {
                let mut csv = String::from("t");
                for ph in &out.temporal_density.phases {
                    csv.push_str(&format!(",phase={ph}"));
                }
                csv.push('\n');
                for (i, t) in out.temporal_density.times.iter().enumerate() {
                    csv.push_str(&format!("{t}"));
                    for v in &out.temporal_density.densities[i] {
                        csv.push_str(&format!(",{v}"));
                    }
                    csv.push('\n');
                }
                let path = dir.join("acceleration_density.csv");
                fs::write(&path, csv).map_err(|e| CliError::Io {
                    path: path.display().to_string(),
                    source: e,
                })?;
                files.push(path);
            }
            results = json!({
                "half_cycle_mean_x": out.half_cycle_mean_x,
                "predicted_increment": out.predicted_increment,
                "dimensional_estimate_ratio": out.dimensional_estimate_ratio,
            });
        }
        ScenarioConfig::Diffraction {
            duration,
            sigma_en_over_lattice,
        } => {
            let sigma = sigma_en_over_lattice * ctx.model.lattice_constant;
            let cases = run_diffraction(ctx, sigma, *duration, samples)?;
            let mut summary = Vec::new();
            for (i, case) in cases.iter().enumerate() {
                files.extend(write_trace(
                    &case.trace,
                    dir,
                    &format!("{kind}_q{i}"),
                    formats,
                )?);
                summary.push(json!({
                    "phase_delay": case.phase_delay,
                    "drift_rate": case.drift_rate,
                    "width_growth": case.width_growth,
                    "group_velocity": case.predicted_group_velocity,
                    "diffraction_coefficient": case.predicted_diffraction,
                }));
            }
            results = json!({ "cases": summary });
        }
        ScenarioConfig::Refraction {
            kappa_ratio,
            negative,
            segment_duration,
            sigma_en_over_lattice,
        } => {
            let sigma = sigma_en_over_lattice * ctx.model.lattice_constant;
            let kappa2 = ctx.model.kappa_mag() * kappa_ratio;
            let out = run_refraction(ctx, kappa2, *negative, *segment_duration, sigma, samples)?;
            files.extend(write_trace(&out.trace, dir, kind, formats)?);
            results = json!({
                "slope_incident": out.slope_incident,
                "slope_refracted": out.slope_refracted,
                "measured_index": out.measured_index,
                "predicted_index": out.predicted_index,
            });
        }
        ScenarioConfig::Lensing { steps } => {
            let steps: Vec<ModulationStep> = steps
                .iter()
                .map(|s| ModulationStep::new(s[0], s[1]))
                .collect::<Result<_, _>>()?;
            // spread support: generous window for the composed kernels
            let total_g: f64 = steps.iter().map(|s| s.g).sum();
            let half = (total_g * 1.5).ceil() as u32 + 30;
            let initial = SidebandState::delta(Window::symmetric(half));
            let out = run_lensing(&initial, &steps, LensingPath::Kernel, &ctx.model)?;
            results = json!({
                "fidelity": out.fidelity,
                "g_sum": [out.g_sum.0, out.g_sum.1],
                "steps": steps.len(),
            });
        }
        ScenarioConfig::Talbot {
            period,
            pattern,
            duration,
        } => {
            let pattern: Vec<C64> = pattern.iter().map(|p| C64::new(p[0], p[1])).collect();
            let input = TalbotInput {
                period: *period,
                pattern,
            };
            let out = run_talbot(ctx, &input, *duration, samples)?;
            files.extend(write_trace(&out.trace, dir, kind, formats)?);
            if formats.iter().any(|f| f == "csv") {
                let mut csv = String::from("t,autocorrelation\n");
                for (t, c) in out.trace.times.iter().zip(&out.autocorrelation) {
                    csv.push_str(&format!("{t},{c}\n"));
                }
                let path = dir.join("talbot_autocorrelation.csv");
                fs::write(&path, csv).map_err(|e| CliError::Io {
                    path: path.display().to_string(),
                    source: e,
                })?;
                files.push(path);
            }
            results = json!({
                "revivals": out
                    .revivals
                    .iter()
                    .map(|r| json!({"time": r.time, "correlation": r.correlation}))
                    .collect::<Vec<_>>(),
            });
        }
    }

    if config.output.formats.iter().any(|f| f == "json") {
        let manifest = write_manifest(config, ctx, dir, &files, results)?;
        files.push(manifest);
    }
    Ok(files)
}
