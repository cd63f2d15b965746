//! Scenario configuration (TOML, `schema_version = 1`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::ParticleKinetic;
use crate::error::{Error, Result};
use crate::phase_space::{Metric, PhysicalConstants};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_CONFIG: &str = include_str!("../../configs/default.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Brackets,
    Gauge,
    Dynamics,
    Quantum,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Brackets, Suite::Gauge, Suite::Dynamics, Suite::Quantum];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Brackets => "brackets",
            Suite::Gauge => "gauge",
            Suite::Dynamics => "dynamics",
            Suite::Quantum => "quantum",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Suite::Brackets => "canonical and kinetic bracket algebra at seeded states",
            Suite::Gauge => "lattice curvature from covariant derivatives and plaquette holonomy",
            Suite::Dynamics => "dual-chart symplectic evolution, energy and reversibility",
            Suite::Quantum => "operator algebra, grid commutator, density evolution and scatter",
        }
    }

    /// Parses one name; `all` expands to every suite.
    pub fn parse_list(name: &str) -> Option<Vec<Suite>> {
        if name == "all" {
            return Some(Suite::ALL.to_vec());
        }
        Suite::ALL.into_iter().find(|s| s.name() == name).map(|s| vec![s])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeConfig {
    pub points: usize,
    pub spacing: f64,
    pub field_strength: f64,
    pub wavevector: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationConfig {
    pub particle: usize,
    pub field: usize,
    pub evolution: usize,
    pub grid_points: usize,
    pub grid_spacing: f64,
    pub packet_width: f64,
    pub sweep_extent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub steps: usize,
    pub states: usize,
    pub relativistic: bool,
}

impl IntegratorConfig {
    pub fn kinetic(&self) -> ParticleKinetic {
        if self.relativistic {
            ParticleKinetic::Relativistic
        } else {
            ParticleKinetic::Nonrelativistic
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketConfig {
    pub states: usize,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumConfig {
    pub duration: f64,
    pub samples: usize,
    pub gaussian_states: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub suites: Vec<Suite>,
    pub signature: Vec<f64>,
    pub constants: PhysicalConstants,
    pub omega0: f64,
    pub lattice: LatticeConfig,
    pub truncation: TruncationConfig,
    pub integrator: IntegratorConfig,
    pub brackets: BracketConfig,
    pub quantum: QuantumConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: Option<u32>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    suites: Option<Vec<String>>,
    #[serde(default)]
    dimensions: RawDimensions,
    #[serde(default)]
    constants: RawConstants,
    #[serde(default)]
    lattice: RawLattice,
    #[serde(default)]
    truncation: RawTruncation,
    #[serde(default)]
    integrator: RawIntegrator,
    #[serde(default)]
    brackets: RawBrackets,
    #[serde(default)]
    quantum: RawQuantum,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDimensions {
    n: Option<usize>,
    signature: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    m: Option<f64>,
    c: Option<f64>,
    chi: Option<f64>,
    hbar: Option<f64>,
    omega0: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    points: Option<usize>,
    spacing: Option<f64>,
    field_strength: Option<f64>,
    wavevector: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTruncation {
    particle: Option<usize>,
    field: Option<usize>,
    evolution: Option<usize>,
    grid_points: Option<usize>,
    grid_spacing: Option<f64>,
    packet_width: Option<f64>,
    sweep_extent: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    dt: Option<f64>,
    steps: Option<usize>,
    states: Option<usize>,
    kinetic: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBrackets {
    states: Option<usize>,
    step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuantum {
    duration: Option<f64>,
    samples: Option<usize>,
    gaussian_states: Option<usize>,
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

fn positive(field: &str, v: Option<f64>, default: f64) -> Result<f64> {
    let v = v.unwrap_or(default);
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be finite and positive, got {v}")))
    }
}

fn at_least(field: &str, v: Option<usize>, default: usize, min: usize) -> Result<usize> {
    let v = v.unwrap_or(default);
    if v >= min {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be at least {min}, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map_or_else(|| "<document>".to_string(), |s| locate_key(text, s.start));
            invalid(&field, e.message().to_string())
        })?;
        Self::resolve(raw)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid("<file>", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn default_scenario() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("bundled default config is valid")
    }

    fn resolve(raw: RawConfig) -> Result<Self> {
        let schema_version = raw
            .schema_version
            .ok_or_else(|| invalid("schema_version", "missing required field"))?;
        if schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("unsupported version {schema_version}, expected {SCHEMA_VERSION}"),
            ));
        }

        let mut suites = Vec::new();
        for name in raw.suites.unwrap_or_else(|| vec!["all".into()]) {
            let parsed =
                Suite::parse_list(&name).ok_or_else(|| invalid("suites", format!("unknown suite `{name}`")))?;
            suites.extend(parsed);
        }
        suites.sort();
        suites.dedup();

        let n = at_least("dimensions.n", raw.dimensions.n, 2, 1)?;
        let signature = raw.dimensions.signature.unwrap_or_else(|| vec![1.0; n]);
        if signature.len() != n {
            return Err(invalid(
                "dimensions.signature",
                format!("has {} entries for {n} dimensions", signature.len()),
            ));
        }
        Metric::new(signature.clone()).map_err(|e| invalid("dimensions.signature", e.to_string()))?;

        let c = &raw.constants;
        let m = c.m.ok_or_else(|| invalid("constants.m", "missing required field"))?;
        let constants = PhysicalConstants {
            m: positive("constants.m", Some(m), 1.0)?,
            c: positive("constants.c", c.c, 1.0)?,
            chi: positive("constants.chi", c.chi, 1.0)?,
            hbar: positive("constants.hbar", c.hbar, 1.0)?,
        };
        let omega0 = c.omega0.unwrap_or(1.0);
        if !(omega0 >= 0.0 && omega0.is_finite()) {
            return Err(invalid(
                "constants.omega0",
                format!("must be finite and >= 0, got {omega0}"),
            ));
        }

        let l = &raw.lattice;
        let lattice = LatticeConfig {
            points: at_least("lattice.points", l.points, 64, 5)?,
            spacing: positive("lattice.spacing", l.spacing, 0.05)?,
            field_strength: positive("lattice.field_strength", l.field_strength, 1.0)?,
            wavevector: positive("lattice.wavevector", l.wavevector, 0.6)?,
        };

        let t = &raw.truncation;
        let truncation = TruncationConfig {
            particle: at_least("truncation.particle", t.particle, 24, 8)?,
            field: at_least("truncation.field", t.field, 24, 8)?,
            evolution: at_least("truncation.evolution", t.evolution, 12, 8)?,
            grid_points: at_least("truncation.grid_points", t.grid_points, 64, 8)?,
            grid_spacing: positive("truncation.grid_spacing", t.grid_spacing, 0.09)?,
            packet_width: positive("truncation.packet_width", t.packet_width, 0.9)?,
            sweep_extent: positive("truncation.sweep_extent", t.sweep_extent, 9.6)?,
        };

        let i = &raw.integrator;
        let relativistic = match i.kinetic.as_deref().unwrap_or("nonrelativistic") {
            "nonrelativistic" => false,
            "relativistic" => true,
            other => return Err(invalid("integrator.kinetic", format!("unknown kinetic term `{other}`"))),
        };
        let integrator = IntegratorConfig {
            dt: positive("integrator.dt", i.dt, 1e-3)?,
            steps: at_least("integrator.steps", i.steps, 1000, 1)?,
            states: at_least("integrator.states", i.states, 10, 1)?,
            relativistic,
        };

        let brackets = BracketConfig {
            states: at_least("brackets.states", raw.brackets.states, 100, 1)?,
            step: positive("brackets.step", raw.brackets.step, 1e-5)?,
        };

        let q = &raw.quantum;
        let quantum = QuantumConfig {
            duration: positive("quantum.duration", q.duration, 10.0)?,
            samples: at_least("quantum.samples", q.samples, 100, 1)?,
            gaussian_states: at_least("quantum.gaussian_states", q.gaussian_states, 5, 0)?,
        };

        Ok(Self {
            schema_version,
            seed: raw.seed.unwrap_or(0),
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("dualchart-out")),
            suites,
            signature,
            constants,
            omega0,
            lattice,
            truncation,
            integrator,
            brackets,
            quantum,
        })
    }

    pub fn metric(&self) -> Metric {
        Metric::new(self.signature.clone()).expect("validated on load")
    }

    pub fn dimensions(&self) -> usize {
        self.signature.len()
    }
}

/// Dotted `section.key` path of the key on the line containing `offset`.
fn locate_key(text: &str, offset: usize) -> String {
    let mut section = String::new();
    let mut key = String::new();
    let mut pos = 0;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            section = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            key.clear();
        } else if let Some((k, _)) = trimmed.split_once('=') {
            key = k.trim().to_string();
        }
        pos += line.len() + 1;
        if pos > offset {
            break;
        }
    }
    match (section.is_empty(), key.is_empty()) {
        (_, true) if !section.is_empty() => section,
        (true, _) => key,
        _ => format!("{section}.{key}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_default_parses() {
        let cfg = ScenarioConfig::default_scenario();
        assert_eq!(cfg.suites, Suite::ALL.to_vec());
        assert_eq!(cfg.constants.m, 1.3);
        assert_eq!(cfg.dimensions(), 2);
        assert_eq!(cfg.truncation.particle, 24);
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ScenarioConfig::from_toml("schema_version = 1\n[constants]\nm = 2.0\n").unwrap();
        assert_eq!(cfg.constants.c, 1.0);
        assert_eq!(cfg.omega0, 1.0);
        assert_eq!(cfg.integrator.dt, 1e-3);
    }

    fn field_of(text: &str) -> String {
        match ScenarioConfig::from_toml(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of("schema_version = 1\n[constants]\nc = 2.0\n"), "constants.m");
        assert_eq!(field_of("[constants]\nm = 1.0\n"), "schema_version");
        assert_eq!(field_of("schema_version = 2\n[constants]\nm = 1.0\n"), "schema_version");
        assert_eq!(field_of("schema_version = 1\n[constants]\nm = -1.0\n"), "constants.m");
        assert_eq!(
            field_of("schema_version = 1\n[constants]\nm = \"heavy\"\n"),
            "constants.m"
        );
        assert_eq!(
            field_of("schema_version = 1\n[constants]\nm = 1.0\nhbar = 0\n"),
            "constants.hbar"
        );
        assert_eq!(
            field_of("schema_version = 1\nsuites = [\"optics\"]\n[constants]\nm = 1.0\n"),
            "suites"
        );
        assert_eq!(
            field_of("schema_version = 1\n[constants]\nm = 1.0\n[truncation]\nparticle = 4\n"),
            "truncation.particle"
        );
        assert_eq!(
            field_of("schema_version = 1\n[constants]\nm = 1.0\n[dimensions]\nn = 3\nsignature = [1.0, 1.0]\n"),
            "dimensions.signature"
        );
        assert_eq!(
            field_of("schema_version = 1\n[constants]\nm = 1.0\n[integrator]\nkinetic = \"quantum\"\n"),
            "integrator.kinetic"
        );
    }

    #[test]
    fn suite_names() {
        assert_eq!(Suite::parse_list("gauge"), Some(vec![Suite::Gauge]));
        assert_eq!(Suite::parse_list("all").unwrap().len(), 4);
        assert!(Suite::parse_list("nope").is_none());
    }
}
