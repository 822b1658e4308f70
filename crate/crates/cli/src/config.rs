//! JSON run configuration.
//!
//! Units are fixed by the schema and never inferred: energies in eV,
//! lengths in μm, times in fs, angles in rad, angular frequencies in
//! rad/fs, fields in V/μm. Unknown keys are rejected with the offending
//! key path.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use pinemsim_core::params::{derive_kinematics, DriveParams};
use pinemsim_core::protocols::{ScenarioContext, SolverKind, TdseSettings};
use pinemsim_core::PhysicalConstants;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub beam: BeamConfig,
    pub drive: DriveConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    /// Kinetic energy ε₀, eV.
    pub kinetic_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    /// Photon energy ħω_L, eV.
    pub photon_energy: f64,
    /// Field strength E₀, V/μm.
    pub field_strength: f64,
    /// Phase delay φ₀, rad.
    #[serde(default)]
    pub phase_delay: f64,
    /// Grating period Λ, μm. Exactly one of this or `detuning`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grating_period: Option<f64>,
    /// Detuning Δω_L, rad/fs. Exactly one of this or `grating_period`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<f64>,
    /// Interaction length L, μm.
    #[serde(default = "default_interaction_length")]
    pub interaction_length: f64,
}

fn default_interaction_length() -> f64 {
    13.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioConfig {
    Breathing {
        #[serde(default = "default_periods")]
        periods: f64,
    },
    BlochOscillation {
        #[serde(default = "default_sigma_ratio")]
        sigma_en_over_lattice: f64,
        #[serde(default = "default_periods")]
        periods: f64,
    },
    DetuningSweep {
        /// Detunings to sweep, rad/fs. Zero entries use the synchronized
        /// closed form.
        detunings: Vec<f64>,
    },
    Acceleration {
        cycles: u32,
        #[serde(default)]
        method: MethodConfig,
        #[serde(default = "default_sigma_ratio")]
        sigma_en_over_lattice: f64,
    },
    Diffraction {
        /// Run length, fs.
        duration: f64,
        #[serde(default = "default_diffraction_sigma")]
        sigma_en_over_lattice: f64,
    },
    Refraction {
        /// |κ₂|/|κ₁| across the interface.
        kappa_ratio: f64,
        #[serde(default)]
        negative: bool,
        /// Duration of each segment, fs.
        segment_duration: f64,
        #[serde(default = "default_sigma_ratio")]
        sigma_en_over_lattice: f64,
    },
    Lensing {
        /// Modulation steps applied in order; entries are [g, phase_rad].
        steps: Vec<[f64; 2]>,
    },
    Talbot {
        period: u32,
        /// Complex comb weights as [re, im] pairs.
        pattern: Vec<[f64; 2]>,
        /// Run length, fs.
        duration: f64,
    },
}

fn default_periods() -> f64 {
    2.0
}

fn default_sigma_ratio() -> f64 {
    10.0
}

fn default_diffraction_sigma() -> f64 {
    2.5
}

impl ScenarioConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ScenarioConfig::Breathing { .. } => "breathing",
            ScenarioConfig::BlochOscillation { .. } => "bloch_oscillation",
            ScenarioConfig::DetuningSweep { .. } => "detuning_sweep",
            ScenarioConfig::Acceleration { .. } => "acceleration",
            ScenarioConfig::Diffraction { .. } => "diffraction",
            ScenarioConfig::Refraction { .. } => "refraction",
            ScenarioConfig::Lensing { .. } => "lensing",
            ScenarioConfig::Talbot { .. } => "talbot",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MethodConfig {
    #[default]
    PhaseFlip,
    DetuningFlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    #[default]
    Tba,
    Analytic,
    Tdse,
    All,
}

impl From<SolverChoice> for SolverKind {
    fn from(c: SolverChoice) -> Self {
        match c {
            SolverChoice::Tba => SolverKind::Tba,
            SolverChoice::Analytic => SolverKind::Analytic,
            SolverChoice::Tdse => SolverKind::Tdse,
            SolverChoice::All => SolverKind::All,
        }
    }
}

impl std::str::FromStr for SolverChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tba" => Ok(SolverChoice::Tba),
            "analytic" => Ok(SolverChoice::Analytic),
            "tdse" => Ok(SolverChoice::Tdse),
            "all" => Ok(SolverChoice::All),
            other => Err(format!("unknown solver `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub kind: SolverChoice,
    /// Grid settings used when the solver is `tdse` or `all`.
    pub grid: GridConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: SolverChoice::Tba,
            grid: GridConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub periods: u32,
    pub points_per_period: usize,
    pub cfl_target: f64,
    /// Real-space envelope width σ_z, μm.
    pub sigma_z: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let d = TdseSettings::default();
        Self {
            periods: d.periods,
            points_per_period: d.points_per_period,
            cfl_target: d.cfl_target,
            sigma_z: d.sigma_z,
        }
    }
}

impl From<&GridConfig> for TdseSettings {
    fn from(g: &GridConfig) -> Self {
        TdseSettings {
            periods: g.periods,
            points_per_period: g.points_per_period,
            cfl_target: g.cfl_target,
            sigma_z: g.sigma_z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    /// Subset of {"csv", "json"}.
    pub formats: Vec<String>,
    /// Number of trace samples, at least 2.
    pub samples: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            formats: vec!["csv".into(), "json".into()],
            samples: 129,
        }
    }
}

/// Keys allowed in the `scenario` object per kind; the internally tagged
/// enum alone does not reject unknown keys inside the variant body.
fn scenario_allowed_keys(kind: &str) -> Option<&'static [&'static str]> {
    match kind {
        "breathing" => Some(&["kind", "periods"]),
        "bloch_oscillation" => Some(&["kind", "sigma_en_over_lattice", "periods"]),
        "detuning_sweep" => Some(&["kind", "detunings"]),
        "acceleration" => Some(&["kind", "cycles", "method", "sigma_en_over_lattice"]),
        "diffraction" => Some(&["kind", "duration", "sigma_en_over_lattice"]),
        "refraction" => Some(&[
            "kind",
            "kappa_ratio",
            "negative",
            "segment_duration",
            "sigma_en_over_lattice",
        ]),
        "lensing" => Some(&["kind", "steps"]),
        "talbot" => Some(&["kind", "period", "pattern", "duration"]),
        _ => None,
    }
}

/// Parse and validate a configuration from JSON text.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::Config("top level must be an object".into()))?;
    if !obj.contains_key("scenario") {
        return Err(CliError::Config("missing required key `scenario`".into()));
    }
    // reject unknown keys inside the scenario object by hand
    if let Some(scenario) = obj.get("scenario").and_then(Value::as_object) {
        let kind = scenario
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::Config("scenario: missing `kind`".into()))?;
        let allowed = scenario_allowed_keys(kind)
            .ok_or_else(|| CliError::Config(format!("scenario: unknown kind `{kind}`")))?;
        for key in scenario.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "scenario ({kind}): unknown key `{key}`"
                )));
            }
        }
    }
    let config: RunConfig =
        serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<(), CliError> {
    let b = &config.beam;
    if !(b.kinetic_energy >= 0.0) {
        return Err(CliError::Config(format!(
            "beam.kinetic_energy: must be nonnegative, got {}",
            b.kinetic_energy
        )));
    }
    let d = &config.drive;
    if !(d.photon_energy > 0.0) {
        return Err(CliError::Config(format!(
            "drive.photon_energy: must be positive, got {}",
            d.photon_energy
        )));
    }
    if !(d.field_strength >= 0.0) {
        return Err(CliError::Config(format!(
            "drive.field_strength: must be nonnegative, got {}",
            d.field_strength
        )));
    }
    match (d.grating_period, d.detuning) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "drive: give exactly one of `grating_period` or `detuning`, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Config(
                "drive: give exactly one of `grating_period` or `detuning`".into(),
            ))
        }
        _ => {}
    }
    if config.output.samples < 2 {
        return Err(CliError::Config(format!(
            "output.samples: need at least 2, got {}",
            config.output.samples
        )));
    }
    for f in &config.output.formats {
        if f != "csv" && f != "json" {
            return Err(CliError::Config(format!(
                "output.formats: unknown format `{f}` (expected csv or json)"
            )));
        }
    }
    if let ScenarioConfig::Lensing { steps } = &config.scenario {
        for (i, s) in steps.iter().enumerate() {
            if !(s[0] >= 0.0) {
                return Err(CliError::Config(format!(
                    "scenario.steps[{i}]: coupling must be nonnegative"
                )));
            }
        }
    }
    Ok(())
}

/// Build the scenario context (constants, beam, drive, lattice model) from
/// a validated configuration.
pub fn build_context(config: &RunConfig) -> Result<ScenarioContext, CliError> {
    let consts = PhysicalConstants::default();
    let beam = derive_kinematics(&consts, config.beam.kinetic_energy)?;
    let omega = config.drive.photon_energy / consts.hbar;
    let drive = match (config.drive.grating_period, config.drive.detuning) {
        (Some(period), None) => DriveParams::new(
            omega,
            config.drive.field_strength,
            config.drive.phase_delay,
            period,
            config.drive.interaction_length,
        )?,
        (None, Some(detuning)) => DriveParams::with_detuning(
            &beam,
            omega,
            config.drive.field_strength,
            config.drive.phase_delay,
            detuning,
            config.drive.interaction_length,
        )?,
        _ => unreachable!("validated"),
    };
    Ok(ScenarioContext::new(consts, beam, drive)?)
}
