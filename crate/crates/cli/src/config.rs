//! Configuration file schema and the built-in presets.
//!
//! A configuration is one TOML document. `schema_version` must be present
//! and equal to [`SCHEMA_VERSION`]; every table rejects unknown keys. Each
//! subcommand reads its own table (`[run]`, `[sweep]`, `[equilibrium]`,
//! `[mbmodel]`, `[meanfield]`); `sweep` also uses `[run]` as its template.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sympcool::qbe::{CutoffSchedule, EvaporationSchedule, KernelChoice, ScenarioConfig, TrapRef};
use sympcool::trap::TrapSpec;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<ScenarioConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<EquilibriumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mbmodel: Option<MbModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meanfield: Option<MeanFieldConfig>,
}

/// Cartesian sweep around the `[run]` template. An empty axis keeps the
/// template value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Ramp rate of every ramped cutoff.
    #[serde(default)]
    pub gamma: Vec<f64>,
    /// Hold time of every ramped cutoff.
    #[serde(default)]
    pub hold: Vec<f64>,
    #[serde(default)]
    pub alpha_b: Vec<f64>,
    /// `N_f/N_b` at fixed `N_b`.
    #[serde(default)]
    pub n_ratio: Vec<f64>,
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

/// Equilibrium temperature against the initial fermion temperature, one
/// curve per fermion number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub n_b: f64,
    pub n_f: Vec<f64>,
    /// Initial boson temperature in units of `T_F`.
    pub t_b0_over_t_fermi: f64,
    /// Range of `T_f(0)/T_F`, sampled at `points` uniform values.
    pub t_f0_min: f64,
    pub t_f0_max: f64,
    pub points: usize,
    /// Grid size; by default sized for each point separately.
    #[serde(default)]
    pub n_max: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MbModelConfig {
    pub n_b: f64,
    pub n_f: f64,
    pub t_b0: f64,
    pub t_f0: f64,
    pub t_end: f64,
    pub dt_sample: f64,
    #[serde(default = "mb_rtol")]
    pub rtol: f64,
    #[serde(default = "mb_atol")]
    pub atol: f64,
}

fn mb_rtol() -> f64 {
    1e-9
}

fn mb_atol() -> f64 {
    1e-12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanFieldConfig {
    pub n_b: f64,
    pub n_f: f64,
    pub trap: TrapRef,
    #[serde(default = "profile_points")]
    pub points: usize,
}

fn profile_points() -> usize {
    200
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        // Check the version first so an old file gets a version message
        // rather than a complaint about some renamed key.
        let raw: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        match raw.get("schema_version") {
            None => return Err(CliError::Config("missing key `schema_version`".into())),
            Some(toml::Value::Integer(v)) if *v == SCHEMA_VERSION as i64 => {}
            Some(v) => {
                return Err(CliError::Config(format!(
                    "`schema_version` = {v} is not supported (expected {SCHEMA_VERSION})"
                )))
            }
        }
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn empty() -> Self {
        Config {
            schema_version: SCHEMA_VERSION,
            run: None,
            sweep: None,
            equilibrium: None,
            mbmodel: None,
            meanfield: None,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    build: fn() -> Config,
}

impl Preset {
    pub fn config(&self) -> Config {
        (self.build)()
    }
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig1",
        summary: "equilibrium temperature curves, N_b = 1e6, T_b(0) = 0.1 T_F",
        build: fig1,
    },
    Preset {
        name: "fig2",
        summary: "thermalization without evaporation, N_b = 1e5, N_f = 1e3",
        build: fig2,
    },
    Preset {
        name: "fig3",
        summary: "evaporation of both species, N_b = 1e5, N_f = 1e4",
        build: fig3,
    },
    Preset {
        name: "fig5",
        summary: "as fig3 with only the boson cutoff ramped",
        build: fig5,
    },
    Preset {
        name: "fig7-potassium",
        summary: "40K-39K mixture, N_b = 1e6, N_f = 1e5, fast ramp after tau = 0.04",
        build: fig7_potassium,
    },
    Preset {
        name: "potassium-overlay",
        summary: "zero-temperature mean-field profiles for the 40K-39K trap",
        build: potassium_overlay,
    },
];

pub fn preset(name: &str) -> Result<Config, CliError> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .map(Preset::config)
        .ok_or_else(|| {
            let known: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
            CliError::Config(format!("unknown preset '{name}' (known: {})", known.join(", ")))
        })
}

fn scenario(n_b: f64, n_f: f64, t_b0: f64, t_f0: f64, n_max: usize, t_end: f64, every: f64) -> ScenarioConfig {
    ScenarioConfig {
        trap: None,
        n_b,
        n_f,
        t_b0,
        t_f0,
        n_max,
        alpha_b: None,
        schedule: EvaporationSchedule::NONE,
        t_end,
        snapshot_every: every,
        rtol: 1e-8,
        atol: 1e-12,
        kernel: KernelChoice::Fast,
        store_occupations: false,
    }
}

/// Boson-boson weight for the generic figure scenarios: the cross-section
/// ratio of the potassium mixture. With it the fig3 scenario ends at
/// T_f/T_F = 0.14; with 1 it ends at 0.25.
fn figure_alpha_b() -> Option<f64> {
    sympcool::trap::trap_preset("K40-K39").map(|t| t.alpha_b())
}

fn with_run(run: ScenarioConfig) -> Config {
    Config {
        run: Some(run),
        ..Config::empty()
    }
}

fn fig1() -> Config {
    Config {
        equilibrium: Some(EquilibriumConfig {
            n_b: 1e6,
            n_f: vec![1e3, 1e4, 1e5, 2e5, 4e5, 1e6],
            t_b0_over_t_fermi: 0.1,
            t_f0_min: 0.1,
            t_f0_max: 3.0,
            points: 30,
            n_max: None,
        }),
        ..Config::empty()
    }
}

fn fig2() -> Config {
    let mut run = scenario(1e5, 1e3, 43.7, 81.8, 1500, 0.05, 0.001);
    run.alpha_b = figure_alpha_b();
    let mut c = with_run(run);
    c.mbmodel = Some(MbModelConfig {
        n_b: 1e5,
        n_f: 1e3,
        t_b0: 43.7,
        t_f0: 81.8,
        t_end: 0.05,
        dt_sample: 0.0005,
        rtol: mb_rtol(),
        atol: mb_atol(),
    });
    c
}

fn fig3() -> Config {
    let mut run = scenario(1e5, 1e4, 43.7, 186.0, 1001, 2.0, 0.05);
    run.alpha_b = figure_alpha_b();
    run.schedule = EvaporationSchedule {
        boson: CutoffSchedule::ramp(500.0, 0.04, 500.0, 1.0),
        fermion: CutoffSchedule::ramp(1000.0, 0.04, 500.0, 1.0),
    };
    with_run(run)
}

fn fig5() -> Config {
    let mut run = scenario(1e5, 1e4, 43.7, 186.0, 1001, 2.2, 0.05);
    run.alpha_b = figure_alpha_b();
    run.schedule = EvaporationSchedule {
        boson: CutoffSchedule::ramp(500.0, 0.04, 500.0, 1.0),
        fermion: CutoffSchedule::constant(1000.0),
    };
    with_run(run)
}

fn fig7_potassium() -> Config {
    let mut run = scenario(1e6, 1e5, 94.1, 590.4, 1001, 0.064, 0.002);
    run.trap = Some(TrapRef::Preset("K40-K39".into()));
    run.schedule = EvaporationSchedule {
        boson: CutoffSchedule::ramp(1000.0, 0.04, 1000.0, 100.0),
        fermion: CutoffSchedule::ramp(1000.0, 0.04, 1000.0, 100.0),
    };
    with_run(run)
}

fn potassium_overlay() -> Config {
    Config {
        meanfield: Some(MeanFieldConfig {
            n_b: 1e5,
            n_f: 2e4,
            trap: TrapRef::Preset("K40-K39".into()),
            points: profile_points(),
        }),
        ..Config::empty()
    }
}

/// Resolved physical constants of a trap reference, for the mean-field
/// commands.
pub fn resolve_trap(trap: &TrapRef) -> Result<TrapSpec, CliError> {
    trap.resolve().map_err(|e| CliError::Config(format!("meanfield.trap: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_toml() {
        for p in PRESETS {
            let c = p.config();
            let back = Config::parse(&c.to_toml()).unwrap();
            assert_eq!(back, c, "{}", p.name);
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let text = "schema_version = 1\n[run]\nn_b = 1.0\nn_f = 1.0\nt_b0 = 1.0\nt_f0 = 1.0\nn_max = 10\nt_end = 1.0\nsnapshot_every = 0.1\nbogus_key = 3\n";
        let err = Config::parse(text).unwrap_err().to_string();
        assert!(err.contains("bogus_key"), "{err}");
    }

    #[test]
    fn version_is_checked() {
        assert!(Config::parse("").unwrap_err().to_string().contains("schema_version"));
        assert!(Config::parse("schema_version = 7").unwrap_err().to_string().contains("7"));
    }
}
