//! Experiment configuration: the device parameter file plus an `[experiment]` block.
//!
//! ```toml
//! [magnon]
//! linewidth_mhz = 1.567
//!
//! [experiment]
//! seed = 7
//! shots = 100000
//!
//! [experiment.settings]
//! tau_us = 0.8
//!
//! [experiment.fig3_tau_sweep.grids]
//! tau_us = { start = 0.04, stop = 4.0, points = 100 }
//! ```
//!
//! Keys directly under `[experiment]` apply to every experiment; a sub-table
//! named after an experiment id overrides them for that experiment.

use crate::error::{Error, Result};
use magnon_core::DeviceParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

/// Monte-Carlo shots per record unless `--paper-scale` is given.
pub const DESK_SHOTS: usize = 100_000;

/// Smallest accepted shot count.
pub const MIN_SHOTS: usize = 100;

/// Largest statistical error 1/√N listed in the shot-count table.
pub const MAX_TABLE_ERROR: f64 = 0.01;

pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Fig1dSensitivityVsGammaM,
    Fig2SignalNoise,
    Fig3TauSweep,
    Fig4DetuningSweep,
    S2ModelLadder,
    S1LinewidthOptimum,
    CharacterizationSuite,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        Self::Fig1dSensitivityVsGammaM,
        Self::Fig2SignalNoise,
        Self::Fig3TauSweep,
        Self::Fig4DetuningSweep,
        Self::S2ModelLadder,
        Self::S1LinewidthOptimum,
        Self::CharacterizationSuite,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fig1dSensitivityVsGammaM => "fig1d_sensitivity_vs_gamma_m",
            Self::Fig2SignalNoise => "fig2_signal_noise",
            Self::Fig3TauSweep => "fig3_tau_sweep",
            Self::Fig4DetuningSweep => "fig4_detuning_sweep",
            Self::S2ModelLadder => "s2_model_ladder",
            Self::S1LinewidthOptimum => "s1_linewidth_optimum",
            Self::CharacterizationSuite => "characterization_suite",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Self::Fig1dSensitivityVsGammaM => "analytic sensitivity against magnon linewidth for several dispersive shifts",
            Self::Fig2SignalNoise => "p_e against magnon population and the Allan deviation of a shot record",
            Self::Fig3TauSweep => "simulated efficiency, noise and sensitivity against sensing time",
            Self::Fig4DetuningSweep => "simulated p_e and sensitivity against Ramsey detuning",
            Self::S2ModelLadder => "analytic and simulated sensitivities over a magnon linewidth ladder",
            Self::S1LinewidthOptimum => "qubit linewidth against magnon linewidth at fixed population",
            Self::CharacterizationSuite => "coupling, Purcell limit, excitation ratio, pulse and population calibrations",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }

    /// Shot count of the matching row of the shot table, for experiments that sample shots.
    pub fn full_scale_shots(&self) -> Option<usize> {
        match self {
            Self::Fig2SignalNoise | Self::Fig3TauSweep | Self::Fig4DetuningSweep => Some(1_000_000),
            _ => None,
        }
    }

    /// Sweep grids this experiment reads, with their defaults.
    pub fn default_grids(&self) -> Vec<(&'static str, GridSpec)> {
        let lin = |start, stop, points| GridSpec::Range {
            start,
            stop,
            points,
            scale: Scale::Linear,
        };
        let log = |start, stop, points| GridSpec::Range {
            start,
            stop,
            points,
            scale: Scale::Log,
        };
        match self {
            Self::Fig1dSensitivityVsGammaM => vec![
                ("chi_mhz", GridSpec::Values(vec![-2.0, -10.0])),
                ("gamma_m_mhz", log(0.1, 1000.0, 81)),
            ],
            Self::Fig2SignalNoise => vec![("n_bar", lin(0.0, 0.06, 13))],
            Self::Fig3TauSweep => vec![("tau_us", lin(0.04, 4.0, 100))],
            Self::Fig4DetuningSweep => vec![("delta_s_mhz", lin(-1.0, 1.0, 41))],
            Self::S2ModelLadder => vec![("gamma_m_mhz", GridSpec::Values(vec![1.0, 4.0, 8.0, 16.0]))],
            Self::S1LinewidthOptimum => vec![
                ("chi_mhz", GridSpec::Values(vec![-0.5, -1.0, -2.0, -4.0])),
                ("gamma_m_mhz", log(0.1, 100.0, 61)),
            ],
            Self::CharacterizationSuite => Vec::new(),
        }
    }

    fn default_tau_us(&self) -> f64 {
        match self {
            // Sensing time equal to the measured T₂*.
            Self::Fig1dSensitivityVsGammaM => 0.89,
            _ => 0.8,
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// An explicit list or an evenly spaced range (inclusive of both ends).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Values(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        points: usize,
        #[serde(default)]
        scale: Scale,
    },
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Self::Values(ref v) => v.clone(),
            Self::Range {
                start,
                stop,
                points,
                scale,
            } => {
                let span = points.saturating_sub(1).max(1) as f64;
                let mix = |a: f64, b: f64, k: usize| (a * (span - k as f64) + b * k as f64) / span;
                match scale {
                    Scale::Linear => (0..points).map(|k| mix(start, stop, k)).collect(),
                    Scale::Log => (0..points).map(|k| mix(start.ln(), stop.ln(), k).exp()).collect(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveMapKind {
    /// Ω_d = λ√n̄ with λ from a simulated spectrum calibration.
    #[default]
    Calibrated,
    /// Inverse of the steady-state population.
    SteadyState,
}

/// Scalar knobs. Every experiment ignores the ones it does not use.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsFile {
    pub tau_us: Option<f64>,
    pub n_bar: Option<f64>,
    pub drive_map: Option<DriveMapKind>,
    pub calibration_target: Option<f64>,
    pub sensing_n_m_levels: Option<usize>,
    pub calibration_n_m_levels: Option<usize>,
    pub lambda_ef: Option<f64>,
    pub tune_dephasing: Option<bool>,
    pub trajectory_sample_ns: Option<f64>,
    pub magnon_calibration: Option<bool>,
}

impl SettingsFile {
    fn or(&self, base: &Self) -> Self {
        Self {
            tau_us: self.tau_us.or(base.tau_us),
            n_bar: self.n_bar.or(base.n_bar),
            drive_map: self.drive_map.or(base.drive_map),
            calibration_target: self.calibration_target.or(base.calibration_target),
            sensing_n_m_levels: self.sensing_n_m_levels.or(base.sensing_n_m_levels),
            calibration_n_m_levels: self.calibration_n_m_levels.or(base.calibration_n_m_levels),
            lambda_ef: self.lambda_ef.or(base.lambda_ef),
            tune_dephasing: self.tune_dephasing.or(base.tune_dephasing),
            trajectory_sample_ns: self.trajectory_sample_ns.or(base.trajectory_sample_ns),
            magnon_calibration: self.magnon_calibration.or(base.magnon_calibration),
        }
    }
}

/// Resolved scalar knobs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub tau_us: f64,
    /// Population at which the linewidth excess is evaluated.
    pub n_bar: f64,
    pub drive_map: DriveMapKind,
    pub calibration_target: f64,
    pub sensing_n_m_levels: usize,
    pub calibration_n_m_levels: usize,
    pub lambda_ef: f64,
    pub tune_dephasing: bool,
    pub trajectory_sample_ns: f64,
    /// Run the simulated magnon-population calibration in the characterization suite.
    pub magnon_calibration: bool,
}

impl Settings {
    fn resolve(id: ExperimentId, f: &SettingsFile) -> Self {
        Self {
            tau_us: f.tau_us.unwrap_or(id.default_tau_us()),
            n_bar: f.n_bar.unwrap_or(0.1),
            drive_map: f.drive_map.unwrap_or_default(),
            calibration_target: f.calibration_target.unwrap_or(0.615),
            sensing_n_m_levels: f.sensing_n_m_levels.unwrap_or(6),
            calibration_n_m_levels: f.calibration_n_m_levels.unwrap_or(12),
            lambda_ef: f.lambda_ef.unwrap_or(magnon_dynamics::LAMBDA_EF_DEFAULT),
            tune_dephasing: f.tune_dephasing.unwrap_or(true),
            trajectory_sample_ns: f.trajectory_sample_ns.unwrap_or(1.0),
            magnon_calibration: f.magnon_calibration.unwrap_or(true),
        }
    }

    fn check(&self, out: &mut Vec<Diagnostic>) {
        let mut positive = |field: &str, v: f64| {
            if !(v > 0.0) || !v.is_finite() {
                out.push(Diagnostic::error(format!("experiment.settings.{field}"), format!("must be positive, got {v}")));
            }
        };
        positive("tau_us", self.tau_us);
        positive("calibration_target", self.calibration_target);
        positive("trajectory_sample_ns", self.trajectory_sample_ns);
        if !(self.n_bar >= 0.0) || !self.n_bar.is_finite() {
            out.push(Diagnostic::error("experiment.settings.n_bar", "must be nonnegative"));
        }
        if !(self.lambda_ef >= 0.0) || !self.lambda_ef.is_finite() {
            out.push(Diagnostic::error("experiment.settings.lambda_ef", "must be nonnegative"));
        }
        for (field, n) in [
            ("sensing_n_m_levels", self.sensing_n_m_levels),
            ("calibration_n_m_levels", self.calibration_n_m_levels),
        ] {
            if n < 2 {
                out.push(Diagnostic::error(format!("experiment.settings.{field}"), "needs at least two levels"));
            }
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Block {
    seed: Option<u64>,
    shots: Option<usize>,
    out: Option<PathBuf>,
    #[serde(default)]
    grids: BTreeMap<String, GridSpec>,
    #[serde(default)]
    settings: SettingsFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn warning(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}: {}", self.field, self.message)
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub paper_scale: bool,
}

/// A parsed configuration file.
#[derive(Debug, Clone)]
pub struct ConfigFile {
    params: DeviceParams,
    /// Canonical device overlay, part of the config hash.
    device_toml: String,
    common: Block,
    blocks: BTreeMap<ExperimentId, Block>,
}

impl ConfigFile {
    /// The bundled device parameters and no overrides.
    pub fn defaults() -> Self {
        let params = DeviceParams::reference();
        Self {
            device_toml: params.to_toml_string(),
            params,
            common: Block::default(),
            blocks: BTreeMap::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::ConfigFile(e.to_string()))?;
        let experiment = match table.remove("experiment") {
            None => toml::Table::new(),
            Some(toml::Value::Table(t)) => t,
            Some(_) => return Err(Error::config("experiment", "must be a table")),
        };
        let overlay = toml::to_string(&table).map_err(|e| Error::ConfigFile(e.to_string()))?;
        let params = DeviceParams::reference().overlay_toml_str(&overlay)?;

        let mut common = toml::Table::new();
        let mut blocks = BTreeMap::new();
        for (key, value) in experiment {
            match ExperimentId::parse(&key) {
                Ok(id) => {
                    let block: Block = value
                        .try_into()
                        .map_err(|e: toml::de::Error| Error::config(format!("experiment.{key}"), e.to_string()))?;
                    blocks.insert(id, block);
                }
                Err(_) if ["seed", "shots", "out", "grids", "settings"].contains(&key.as_str()) => {
                    common.insert(key, value);
                }
                Err(_) => return Err(Error::config(format!("experiment.{key}"), "neither a known key nor an experiment id")),
            }
        }
        let common: Block = toml::Value::Table(common)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("experiment", e.to_string()))?;
        Ok(Self {
            device_toml: params.to_toml_string(),
            params,
            common,
            blocks,
        })
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigFile(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Every problem with the configuration of `id`, errors and warnings.
    pub fn diagnostics(&self, id: ExperimentId, ov: &Overrides) -> Vec<Diagnostic> {
        self.build(id, ov).1
    }

    /// Resolved configuration, or the first error diagnostic.
    pub fn resolve(&self, id: ExperimentId, ov: &Overrides) -> Result<ExperimentConfig> {
        let (cfg, diags) = self.build(id, ov);
        match diags.into_iter().find(|d| d.severity == Severity::Error) {
            Some(d) => Err(Error::config(d.field, d.message)),
            None => Ok(cfg),
        }
    }

    fn build(&self, id: ExperimentId, ov: &Overrides) -> (ExperimentConfig, Vec<Diagnostic>) {
        let mut diags = Vec::new();
        let empty = Block::default();
        let block = self.blocks.get(&id).unwrap_or(&empty);
        let prefix = |name: &str| {
            if self.blocks.get(&id).is_some_and(|b| b.grids.contains_key(name)) {
                format!("experiment.{id}.grids.{name}")
            } else {
                format!("experiment.grids.{name}")
            }
        };

        for e in self.params.violations() {
            match e {
                magnon_core::Error::InvalidParameter { field, reason } => diags.push(Diagnostic::error(field, reason)),
                other => diags.push(Diagnostic::error("device", other.to_string())),
            }
        }

        let defaults = id.default_grids();
        for (name, _) in block.grids.iter().chain(&self.common.grids) {
            if !defaults.iter().any(|(n, _)| n == name) {
                // Shared grids may target other experiments; only flag per-experiment ones.
                if block.grids.contains_key(name) {
                    diags.push(Diagnostic::error(
                        format!("experiment.{id}.grids.{name}"),
                        format!("`{id}` has no grid of this name"),
                    ));
                }
            }
        }
        let mut grids = BTreeMap::new();
        for (name, default) in &defaults {
            let spec = block.grids.get(*name).or(self.common.grids.get(*name)).unwrap_or(default);
            let values = spec.values();
            check_grid(&prefix(name), name, spec, &values, &mut diags);
            grids.insert(name.to_string(), values);
        }

        let settings = Settings::resolve(id, &block.settings.or(&self.common.settings));
        settings.check(&mut diags);

        let shots = match (ov.paper_scale, id.full_scale_shots()) {
            (true, Some(n)) => n,
            _ => block.shots.or(self.common.shots).unwrap_or(DESK_SHOTS),
        };
        if shots < MIN_SHOTS {
            diags.push(Diagnostic::error("experiment.shots", format!("must be at least {MIN_SHOTS}, got {shots}")));
        } else if id.full_scale_shots().is_some() {
            let err = 1.0 / (shots as f64).sqrt();
            if err > MAX_TABLE_ERROR {
                diags.push(Diagnostic::warning(
                    "experiment.shots",
                    format!(
                        "{shots} shots give a statistical error 1/sqrt(N) = {:.2}%, above the {:.1}% of the least \
                         sampled row of the shot-count table",
                        100.0 * err,
                        100.0 * MAX_TABLE_ERROR
                    ),
                ));
            }
        }

        let cfg = ExperimentConfig {
            id,
            params: self.params.clone(),
            device_toml: self.device_toml.clone(),
            grids,
            settings,
            shots,
            seed: ov.seed.or(block.seed).or(self.common.seed).unwrap_or(DEFAULT_SEED),
            out_dir: ov
                .out
                .clone()
                .or_else(|| block.out.clone())
                .or_else(|| self.common.out.clone())
                .unwrap_or_else(|| PathBuf::from("runs")),
            paper_scale: ov.paper_scale,
        };
        (cfg, diags)
    }
}

fn check_grid(field: &str, name: &str, spec: &GridSpec, values: &[f64], out: &mut Vec<Diagnostic>) {
    if values.is_empty() {
        out.push(Diagnostic::error(field, "grid is empty"));
        return;
    }
    if let GridSpec::Range {
        scale: Scale::Log,
        start,
        stop,
        ..
    } = *spec
    {
        if !(start > 0.0 && stop > 0.0) {
            out.push(Diagnostic::error(field, "log-spaced grid needs positive ends"));
            return;
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        out.push(Diagnostic::error(field, "grid values must be finite"));
        return;
    }
    let bad = match name {
        "tau_us" | "gamma_m_mhz" => values.iter().any(|&v| v <= 0.0),
        "n_bar" => values.iter().any(|&v| v < 0.0),
        "chi_mhz" => values.iter().any(|&v| v == 0.0),
        _ => false,
    };
    if bad {
        let rule = match name {
            "n_bar" => "values must be nonnegative",
            "chi_mhz" => "values must be nonzero",
            _ => "values must be positive",
        };
        out.push(Diagnostic::error(field, rule));
    }
}

/// Everything one run needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub params: DeviceParams,
    device_toml: String,
    pub grids: BTreeMap<String, Vec<f64>>,
    pub settings: Settings,
    pub shots: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub paper_scale: bool,
}

#[derive(Serialize)]
struct Canonical<'a> {
    id: &'a str,
    device: &'a str,
    grids: &'a BTreeMap<String, Vec<f64>>,
    settings: &'a Settings,
    shots: usize,
    seed: u64,
}

impl ExperimentConfig {
    /// Defaults for `id` with the bundled device parameters.
    pub fn default_for(id: ExperimentId) -> Result<Self> {
        ConfigFile::defaults().resolve(id, &Overrides::default())
    }

    pub fn grid(&self, name: &str) -> &[f64] {
        self.grids.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    /// SHA-256 of the resolved configuration. The output directory is not part of it.
    pub fn hash(&self) -> String {
        let c = Canonical {
            id: self.id.name(),
            device: &self.device_toml,
            grids: &self.grids,
            settings: &self.settings,
            shots: self.shots,
            seed: self.seed,
        };
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    /// Directory receiving this experiment's files.
    pub fn bundle_dir(&self) -> PathBuf {
        self.out_dir.join(self.id.name())
    }
}
