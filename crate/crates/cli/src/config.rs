//! TOML run configurations. Unknown keys are rejected, probability vectors
//! must already be normalized, and every diagnostic names the offending
//! key.

use serde::Deserialize;

use tinycollapse::{
    BranchDistribution, CollapseConstants, EnergySpectrum, EvolveMode, ManyBodySpectrum,
    PhysicalConstants, RunConfig, Spectrum,
};

use crate::CliError;

/// Slack allowed on `Σ initial = 1` in config files. Tighter than rounding
/// noise would ever need; anything worse is a user error, not drift.
const CONFIG_NORMALIZATION_TOL: f64 = 1e-6;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub run: RunSection,
    pub state: StateSection,
    pub spectrum: Option<SpectrumSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub mode: String,
    pub k: Option<f64>,
    pub steps: u64,
    pub trajectories: u64,
    pub seed: u64,
    pub record_stride: Option<u64>,
    pub absorption_threshold: Option<f64>,
    pub step_budget: Option<u64>,
    /// Node budget for `oracle` runs (ignored by `simulate`).
    pub node_budget: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub initial: Vec<f64>,
}

/// Exactly one of the level lists must be present. `*_ev` lists are in
/// eV; `*_planck` lists are already fractions of the Planck energy.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub levels_ev: Option<Vec<f64>>,
    pub levels_planck: Option<Vec<f64>>,
    pub subsystems_ev: Option<Vec<Vec<f64>>>,
    pub subsystems_planck: Option<Vec<Vec<f64>>>,
}

impl SimulateConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))
    }

    /// Turn the parsed file into a validated engine configuration.
    pub fn to_run_config(&self) -> Result<RunConfig, CliError> {
        let initial = self.initial_distribution()?;
        let mode = self.mode()?;
        let spectrum = self.spectrum()?;
        let mut cfg = RunConfig::new(initial, mode);
        cfg.spectrum = spectrum;
        cfg.steps = self.run.steps;
        cfg.trajectories = self.run.trajectories;
        cfg.base_seed = self.run.seed;
        if let Some(stride) = self.run.record_stride {
            cfg.record_stride = stride;
        }
        if let Some(threshold) = self.run.absorption_threshold {
            cfg.absorption_threshold = threshold;
        }
        if let Some(budget) = self.run.step_budget {
            cfg.step_budget = budget;
        }
        cfg.validate().map_err(CliError::from_core)?;
        Ok(cfg)
    }

    pub fn mode(&self) -> Result<EvolveMode, CliError> {
        match self.run.mode.as_str() {
            "fixed-k" => {
                let k = self.run.k.ok_or_else(|| {
                    CliError::Config("run.k is required when run.mode = \"fixed-k\"".into())
                })?;
                if !(0.0..=1.0).contains(&k) || !k.is_finite() {
                    return Err(CliError::Config(format!(
                        "run.k must lie in [0, 1], got {k}"
                    )));
                }
                Ok(EvolveMode::FixedK(k))
            }
            "model-k" => {
                if self.run.k.is_some() {
                    return Err(CliError::Config(
                        "run.k is only valid with run.mode = \"fixed-k\"".into(),
                    ));
                }
                Ok(EvolveMode::ModelK)
            }
            other => Err(CliError::Config(format!(
                "run.mode must be \"fixed-k\" or \"model-k\", got \"{other}\""
            ))),
        }
    }

    pub fn initial_distribution(&self) -> Result<BranchDistribution, CliError> {
        let initial = &self.state.initial;
        if initial.is_empty() {
            return Err(CliError::Config(
                "state.initial must list at least one probability".into(),
            ));
        }
        if let Some(bad) = initial.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(CliError::Config(format!(
                "state.initial entries must be non-negative, got {bad}"
            )));
        }
        let sum: f64 = initial.iter().sum();
        if (sum - 1.0).abs() > CONFIG_NORMALIZATION_TOL {
            return Err(CliError::Config(format!(
                "state.initial violates normalization: entries sum to {sum}, expected 1 \
                 (within {CONFIG_NORMALIZATION_TOL})"
            )));
        }
        BranchDistribution::new(initial.clone()).map_err(CliError::from_core)
    }

    pub fn spectrum(&self) -> Result<Option<Spectrum>, CliError> {
        let Some(section) = &self.spectrum else {
            return Ok(None);
        };
        let constants = CollapseConstants::physical();
        let fields = [
            section.levels_ev.is_some(),
            section.levels_planck.is_some(),
            section.subsystems_ev.is_some(),
            section.subsystems_planck.is_some(),
        ];
        if fields.iter().filter(|&&set| set).count() != 1 {
            return Err(CliError::Config(
                "spectrum must set exactly one of levels_ev, levels_planck, subsystems_ev, \
                 subsystems_planck"
                    .into(),
            ));
        }
        let spectrum = if let Some(levels) = &section.levels_ev {
            Spectrum::Single(
                EnergySpectrum::from_ev(levels, &constants).map_err(CliError::from_core)?,
            )
        } else if let Some(levels) = &section.levels_planck {
            Spectrum::Single(
                EnergySpectrum::from_planck_fractions(levels.clone())
                    .map_err(CliError::from_core)?,
            )
        } else if let Some(rows) = &section.subsystems_ev {
            Spectrum::ManyBody(
                ManyBodySpectrum::from_ev(rows, &constants).map_err(CliError::from_core)?,
            )
        } else {
            Spectrum::ManyBody(
                ManyBodySpectrum::from_planck_fractions(
                    section.subsystems_planck.clone().unwrap(),
                )
                .map_err(CliError::from_core)?,
            )
        };
        Ok(Some(spectrum))
    }
}

/// Optional `verify` sizes.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub verify: Option<VerifySection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub trajectories: Option<u64>,
    pub steps: Option<u64>,
    pub seed: Option<u64>,
}

impl VerifyConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))
    }
}

/// Optional constant overrides for `scenarios`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenariosConfig {
    pub constants: Option<ConstantsSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub planck_time_s: Option<f64>,
    pub hbar_ev_s: Option<f64>,
    pub speed_of_light_m_s: Option<f64>,
    pub boltzmann_ev_k: Option<f64>,
    pub electron_mass_ev: Option<f64>,
    pub horizon_radius_m: Option<f64>,
    pub temperature_k: Option<f64>,
}

impl ScenariosConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))
    }

    pub fn to_constants(&self) -> Result<PhysicalConstants, CliError> {
        let mut constants = PhysicalConstants::physical();
        if let Some(section) = &self.constants {
            let planck_time = section
                .planck_time_s
                .unwrap_or_else(|| constants.collapse.planck_time_s());
            let hbar = section
                .hbar_ev_s
                .unwrap_or_else(|| constants.collapse.hbar_ev_s());
            constants.collapse =
                CollapseConstants::new(planck_time, hbar).map_err(CliError::from_core)?;
            if let Some(v) = section.speed_of_light_m_s {
                constants.speed_of_light_m_s = v;
            }
            if let Some(v) = section.boltzmann_ev_k {
                constants.boltzmann_ev_k = v;
            }
            if let Some(v) = section.electron_mass_ev {
                constants.electron_mass_ev = v;
            }
            if let Some(v) = section.horizon_radius_m {
                constants.horizon_radius_m = v;
            }
            if let Some(v) = section.temperature_k {
                constants.temperature_k = v;
            }
        }
        constants.validate().map_err(CliError::from_core)?;
        Ok(constants)
    }
}
