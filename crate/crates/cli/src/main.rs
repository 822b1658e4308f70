//! Command-line front end: derive parameters, run scenarios, sweep the
//! detuning, and compare solvers.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pinemsim_cli::config::{build_context, parse_config, RunConfig, ScenarioConfig, SolverChoice};
use pinemsim_cli::output::{compare_traces, derived_block, write_manifest, write_trace};
use pinemsim_cli::run::execute;
use pinemsim_cli::CliError;
use pinemsim_core::protocols::{run_bloch_oscillation, run_breathing, SolverKind};

#[derive(Parser)]
#[command(
    name = "pinemsim",
    about = "Synthetic energy-lattice dynamics of laser-modulated free electrons",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Path to the JSON run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Override the output directory from the configuration.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived beam and lattice quantities for a configuration.
    Params(ConfigArg),
    /// Run the configured scenario and write its traces.
    Simulate(ConfigArg),
    /// Run the detuning sweep of the configuration.
    Sweep(ConfigArg),
    /// Run one scenario with two solvers and compare the traces.
    Compare {
        #[command(flatten)]
        config: ConfigArg,
        /// First solver (tba, analytic, tdse).
        #[arg(long, default_value = "tba")]
        solver_a: SolverChoice,
        /// Second solver.
        #[arg(long, default_value = "analytic")]
        solver_b: SolverChoice,
        /// Exit with code 4 when the L2 error exceeds this tolerance.
        #[arg(long)]
        assert_tol: Option<f64>,
    },
}

fn load(arg: &ConfigArg) -> Result<(RunConfig, PathBuf), CliError> {
    let text = fs::read_to_string(&arg.config).map_err(|e| CliError::Io {
        path: arg.config.display().to_string(),
        source: e,
    })?;
    let mut config = parse_config(&text)?;
    if let Some(dir) = &arg.output {
        config.output.directory = dir.display().to_string();
    }
    let dir = PathBuf::from(&config.output.directory);
    Ok((config, dir))
}

fn cmd_params(arg: &ConfigArg) -> Result<(), CliError> {
    let (config, _) = load(arg)?;
    let ctx = build_context(&config)?;
    let derived = derived_block(&ctx);
    println!("{}", serde_json::to_string_pretty(&derived).unwrap());
    Ok(())
}

fn cmd_simulate(arg: &ConfigArg) -> Result<(), CliError> {
    let (config, dir) = load(arg)?;
    let ctx = build_context(&config)?;
    let files = execute(&config, &ctx, &dir)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_sweep(arg: &ConfigArg) -> Result<(), CliError> {
    let (config, dir) = load(arg)?;
    if !matches!(config.scenario, ScenarioConfig::DetuningSweep { .. }) {
        return Err(CliError::Config(
            "sweep requires a detuning_sweep scenario".into(),
        ));
    }
    let ctx = build_context(&config)?;
    let files = execute(&config, &ctx, &dir)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_compare(
    arg: &ConfigArg,
    solver_a: SolverChoice,
    solver_b: SolverChoice,
    assert_tol: Option<f64>,
) -> Result<(), CliError> {
    let (config, dir) = load(arg)?;
    let ctx = build_context(&config)?;
    let settings = (&config.solver.grid).into();
    let samples = config.output.samples;

    let run_with = |solver: SolverKind| -> Result<pinemsim_core::tba::TraceRecord, CliError> {
        let out = match &config.scenario {
            ScenarioConfig::Breathing { periods } => {
                run_breathing(&ctx, *periods, samples, solver, &settings)?
            }
            ScenarioConfig::BlochOscillation {
                sigma_en_over_lattice,
                periods,
            } => run_bloch_oscillation(
                &ctx,
                sigma_en_over_lattice * ctx.model.lattice_constant,
                *periods,
                samples,
                solver,
                &settings,
            )?,
            other => {
                return Err(CliError::Config(format!(
                    "compare supports breathing and bloch_oscillation scenarios, not {}",
                    other.kind_name()
                )))
            }
        };
        Ok(out.traces.into_iter().next().unwrap().1)
    };

    let trace_a = run_with(solver_a.into())?;
    let trace_b = run_with(solver_b.into())?;
    let solver_a_name = format!("{solver_a:?}").to_lowercase();
    let solver_b_name = format!("{solver_b:?}").to_lowercase();
    let report = compare_traces(&trace_a, &trace_b, &solver_a_name, &solver_b_name)?;

    fs::create_dir_all(&dir).map_err(|e| CliError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut files = Vec::new();
    files.extend(write_trace(
        &trace_a,
        &dir,
        &format!("{}_{}", config.scenario.kind_name(), solver_a_name),
        &config.output.formats,
    )?);
    files.extend(write_trace(
        &trace_b,
        &dir,
        &format!("{}_{}", config.scenario.kind_name(), solver_b_name),
        &config.output.formats,
    )?);
    let report_path = dir.join("comparison.json");
    fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap()).map_err(|e| {
        CliError::Io {
            path: report_path.display().to_string(),
            source: e,
        }
    })?;
    files.push(report_path);
    if config.output.formats.iter().any(|f| f == "json") {
        let results = serde_json::json!({
            "l2_error": report.l2_error,
            "linf_error": report.linf_error,
        });
        files.push(write_manifest(&config, &ctx, &dir, &files, results)?);
    }
    println!(
        "{} vs {}: L2 = {:.6e}, Linf = {:.6e}",
        solver_a_name, solver_b_name, report.l2_error, report.linf_error
    );
    for f in files {
        println!("wrote {}", f.display());
    }
    if let Some(tol) = assert_tol {
        if report.l2_error > tol {
            return Err(CliError::Tolerance {
                l2: report.l2_error,
                tolerance: tol,
            });
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Params(arg) => cmd_params(arg),
        Command::Simulate(arg) => cmd_simulate(arg),
        Command::Sweep(arg) => cmd_sweep(arg),
        Command::Compare {
            config,
            solver_a,
            solver_b,
            assert_tol,
        } => cmd_compare(config, *solver_a, *solver_b, *assert_tol),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
