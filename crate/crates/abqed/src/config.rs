//! Run-configuration schema: a single TOML file with nested tables and
//! lists, fully validated (unknown keys rejected) before any computation.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::constants::{PhysicalConstants, UnitSystem};
use crate::error::{Error, Result};
use crate::gauge::GaugeFunction;
use crate::geometry::Vec3;
use crate::interferometer::{
    build_electric_preset, build_electrodynamic_preset, build_magnetic_preset, ElectricPreset,
    ElectrodynamicPreset, InterferometerScenario, MagneticPreset, ParticlePath, SolenoidKind,
    DEFAULT_PHASE_TOL,
};
use crate::quadrature::QuadratureSettings;
use crate::sources::{SourceConfiguration, SourceElement};

/// Numerics block: quadrature settings plus phase and k-space controls.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub rel_tol: f64,
    pub max_subdivision_depth: u32,
    pub solenoid_loops: usize,
    pub loop_segments: usize,
    pub regularization_length: f64,
    pub force_quadrature: bool,
    pub phase_tol: f64,
    pub k_max: f64,
    pub k_levels: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let q = QuadratureSettings::default();
        Self {
            rel_tol: q.rel_tol,
            max_subdivision_depth: q.max_subdivision_depth,
            solenoid_loops: q.solenoid_loops,
            loop_segments: q.loop_segments,
            regularization_length: q.regularization_length,
            force_quadrature: q.force_quadrature,
            phase_tol: DEFAULT_PHASE_TOL,
            k_max: 400.0,
            k_levels: 3,
        }
    }
}

impl NumericsConfig {
    pub fn quadrature(&self) -> QuadratureSettings {
        QuadratureSettings {
            rel_tol: self.rel_tol,
            max_subdivision_depth: self.max_subdivision_depth,
            solenoid_loops: self.solenoid_loops,
            loop_segments: self.loop_segments,
            regularization_length: self.regularization_length,
            force_quadrature: self.force_quadrature,
        }
    }
}

/// Particle block; defaults to the unit system's default particle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    pub charge: f64,
    pub mass: f64,
}

/// Scenario block: a preset name with parameters, or explicit paths.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// One of "magnetic", "electric", "electrodynamic".
    pub preset: Option<String>,
    pub magnetic: Option<MagneticPreset>,
    pub electric: Option<ElectricPreset>,
    pub electrodynamic: Option<ElectrodynamicPreset>,
    /// Explicit paths as rows [t, x, y, z]; requires `sources` at the top
    /// level.
    pub path_a: Option<Vec<[f64; 4]>>,
    pub path_b: Option<Vec<[f64; 4]>>,
    /// Relaxed open-path mode for gauge-dependence demonstrations.
    #[serde(default)]
    pub open_paths: bool,
}

/// Gauge-sweep block.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: u64,
    pub count: usize,
    /// Gauge amplitude scale.
    pub amplitude: f64,
    /// Spatial feature size of the random gauges; defaults to the
    /// interferometer half-width.
    pub feature_size: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            count: 20,
            amplitude: 0.2,
            feature_size: None,
        }
    }
}

/// One field-probe request.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub position: [f64; 3],
    #[serde(default)]
    pub t: f64,
}

/// Top-level run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfiguration {
    pub units: UnitSystem,
    pub numerics: NumericsConfig,
    pub particle: Option<ParticleConfig>,
    pub sources: Vec<SourceElement>,
    pub gauge: Option<GaugeFunction>,
    pub scenario: ScenarioConfig,
    pub sweep: SweepConfig,
    pub probes: Vec<ProbeConfig>,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
}

impl RunConfiguration {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfiguration = toml::from_str(text)
            .map_err(|e| Error::ConfigError(format!("{e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::ConfigError(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.numerics.quadrature().validate()?;
        if self.numerics.phase_tol <= 0.0 || self.numerics.phase_tol.is_nan() {
            return Err(Error::ConfigError("phase_tol must be positive".into()));
        }
        if self.numerics.k_max <= 0.0 || self.numerics.k_levels == 0 {
            return Err(Error::ConfigError(
                "k_max must be positive and k_levels >= 1".into(),
            ));
        }
        for e in &self.sources {
            e.validate().map_err(|err| {
                Error::ConfigError(format!("invalid source element: {err}"))
            })?;
        }
        if let Some(name) = &self.scenario.preset {
            if !matches!(name.as_str(), "magnetic" | "electric" | "electrodynamic") {
                return Err(Error::ConfigError(format!(
                    "unknown preset {name:?}; expected magnetic, electric, or electrodynamic"
                )));
            }
        }
        if self.scenario.path_a.is_some() != self.scenario.path_b.is_some() {
            return Err(Error::ConfigError(
                "explicit scenarios need both path_a and path_b".into(),
            ));
        }
        Ok(())
    }

    pub fn constants(&self) -> PhysicalConstants {
        PhysicalConstants::for_units(self.units)
    }

    pub fn particle(&self) -> (f64, f64) {
        match self.particle {
            Some(p) => (p.charge, p.mass),
            None => PhysicalConstants::default_particle(self.units),
        }
    }

    /// Sources declared at the top level, with the run's constants.
    pub fn source_configuration(&self) -> SourceConfiguration {
        SourceConfiguration::with_elements(self.constants(), self.sources.clone())
    }

    /// Build the scenario this configuration describes.
    pub fn scenario(&self) -> Result<InterferometerScenario> {
        let constants = self.constants();
        let settings = self.numerics.quadrature();
        let (charge, mass) = self.particle();
        let mut scenario = match self.scenario.preset.as_deref() {
            Some("magnetic") => {
                let mut params = self
                    .scenario
                    .magnetic
                    .clone()
                    .unwrap_or_else(|| default_magnetic(self.units));
                params.charge = charge;
                params.mass = mass;
                build_magnetic_preset(&params, constants, settings)?
            }
            Some("electric") => {
                let mut params = self
                    .scenario
                    .electric
                    .clone()
                    .unwrap_or_else(|| default_electric(self.units));
                params.charge = charge;
                params.mass = mass;
                build_electric_preset(&params, constants, settings)?
            }
            Some("electrodynamic") => {
                let mut params = self
                    .scenario
                    .electrodynamic
                    .clone()
                    .unwrap_or_else(|| default_electrodynamic(self.units));
                params.charge = charge;
                params.mass = mass;
                build_electrodynamic_preset(&params, constants, settings)?
            }
            Some(other) => {
                return Err(Error::ConfigError(format!("unknown preset {other:?}")))
            }
            None => {
                let (Some(rows_a), Some(rows_b)) =
                    (&self.scenario.path_a, &self.scenario.path_b)
                else {
                    return Err(Error::ConfigError(
                        "configuration has neither a preset nor explicit paths".into(),
                    ));
                };
                let to_samples = |rows: &Vec<[f64; 4]>| {
                    rows.iter()
                        .map(|row| (row[0], Vec3::new(row[1], row[2], row[3])))
                        .collect::<Vec<_>>()
                };
                let path_a = ParticlePath::from_samples(to_samples(rows_a), charge, mass)?;
                let path_b = ParticlePath::from_samples(to_samples(rows_b), charge, mass)?;
                InterferometerScenario {
                    path_a,
                    path_b,
                    sources: self.source_configuration(),
                    gauge: GaugeFunction::IDENTITY,
                    settings,
                    phase_tol: self.numerics.phase_tol,
                    open_paths: self.scenario.open_paths,
                    label: "explicit".into(),
                }
            }
        };
        scenario.phase_tol = self.numerics.phase_tol;
        scenario.open_paths = self.scenario.open_paths;
        if let Some(g) = &self.gauge {
            scenario.gauge = g.clone();
        }
        // explicit top-level sources extend preset sources
        if self.scenario.preset.is_some() && !self.sources.is_empty() {
            scenario
                .sources
                .elements
                .extend(self.sources.iter().cloned());
        }
        scenario.validate()?;
        Ok(scenario)
    }
}

pub fn default_magnetic(units: UnitSystem) -> MagneticPreset {
    match units {
        UnitSystem::Reduced => MagneticPreset::reduced_defaults(),
        UnitSystem::Si => MagneticPreset {
            flux: 3.9478e-5,
            solenoid_radius: 0.01,
            solenoid: SolenoidKind::Analytic,
            half_width: 0.02,
            half_height: 0.02,
            speed: 1.0e6,
            extra_loops: 0,
            waypoints_per_edge: 8,
            charge: crate::constants::ELECTRON_CHARGE,
            mass: crate::constants::ELECTRON_MASS,
        },
    }
}

pub fn default_electric(units: UnitSystem) -> ElectricPreset {
    match units {
        UnitSystem::Reduced => ElectricPreset::reduced_defaults(),
        UnitSystem::Si => ElectricPreset {
            v_a: 1.0e-3,
            v_b: 0.0,
            pulse_start: 3.0e-6,
            pulse_duration: 2.0e-6,
            edge_time: 0.5e-6,
            cage_inner_radius: 2.0e-3,
            cage_outer_radius: 4.0e-3,
            cage_offset: 0.02,
            half_width: 0.02,
            approach_time: 2.0e-6,
            dwell_margin: 0.4e-6,
            charge: crate::constants::ELECTRON_CHARGE,
            mass: crate::constants::ELECTRON_MASS,
        },
    }
}

pub fn default_electrodynamic(units: UnitSystem) -> ElectrodynamicPreset {
    match units {
        UnitSystem::Reduced => ElectrodynamicPreset::reduced_defaults(),
        UnitSystem::Si => ElectrodynamicPreset {
            flux: 3.9478e-5,
            solenoid_radius: 0.01,
            solenoid: SolenoidKind::Analytic,
            half_width: 0.02,
            half_height: 0.02,
            speed: 1.0e6,
            ramp_start: 2.0e-7,
            ramp_end: 3.0e-7,
            dwell_start: 1.5e-7,
            dwell_end: 3.5e-7,
            cage_shell: None,
            waypoints_per_edge: 8,
            charge: crate::constants::ELECTRON_CHARGE,
            mass: crate::constants::ELECTRON_MASS,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_preset_config_parses() {
        let config = RunConfiguration::from_toml_str(
            r#"
units = "reduced"
[scenario]
preset = "magnetic"
"#,
        )
        .unwrap();
        let scenario = config.scenario().unwrap();
        assert_eq!(scenario.label, "magnetic");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfiguration::from_toml_str(
            r#"
units = "reduced"
not_a_key = 3
"#,
        )
        .unwrap_err();
        let text = format!("{err}");
        assert!(text.contains("not_a_key"), "diagnostic was: {text}");
    }

    #[test]
    fn unknown_preset_rejected() {
        let err = RunConfiguration::from_toml_str(
            r#"
[scenario]
preset = "gravitational"
"#,
        )
        .unwrap_err();
        assert!(format!("{err}").contains("gravitational"));
    }

    #[test]
    fn explicit_paths_and_sources_parse() {
        let config = RunConfiguration::from_toml_str(
            r#"
units = "reduced"

[[sources]]
kind = "point_charge"
position = [0.0, 0.0, 2.0]
strength = 1.0

[scenario]
path_a = [[0.0, -1.0, 0.0, 0.0], [10.0, 0.0, -1.0, 0.0], [20.0, 1.0, 0.0, 0.0]]
path_b = [[0.0, -1.0, 0.0, 0.0], [10.0, 0.0, 1.0, 0.0], [20.0, 1.0, 0.0, 0.0]]
"#,
        )
        .unwrap();
        let scenario = config.scenario().unwrap();
        assert_eq!(scenario.sources.elements.len(), 1);
        scenario.validate().unwrap();
    }

    #[test]
    fn gauge_block_parses() {
        let config = RunConfiguration::from_toml_str(
            r#"
[scenario]
preset = "magnetic"

[gauge]
kind = "gaussian_bump"
center = [0.0, 0.1, 0.0]
width = 0.05
amplitude = 0.3
"#,
        )
        .unwrap();
        let scenario = config.scenario().unwrap();
        assert!(matches!(
            scenario.gauge,
            GaugeFunction::GaussianBump { .. }
        ));
    }

    #[test]
    fn schedule_in_source_parses() {
        let config = RunConfiguration::from_toml_str(
            r#"
[[sources]]
kind = "infinite_solenoid_analytic"
center = [0.0, 0.0, 0.0]
axis = [0.0, 0.0, 1.0]
radius = 0.05
winding_density = 40.0
strength = 2.0
schedule = { kind = "smoothstep_ramp", t_start = 1.0, t_end = 2.0, amplitude_initial = 1.0, amplitude_final = 0.0 }

[scenario]
preset = "magnetic"
"#,
        )
        .unwrap();
        assert_eq!(config.sources.len(), 1);
    }

    #[test]
    fn si_defaults_use_electron() {
        let config = RunConfiguration::from_toml_str(
            r#"
units = "si"
[scenario]
preset = "magnetic"
"#,
        )
        .unwrap();
        let (q, m) = config.particle();
        assert!(q < 0.0);
        assert!(m > 0.0 && m < 1e-29);
    }
}
