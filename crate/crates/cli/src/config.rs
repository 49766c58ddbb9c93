//! Run configuration: JSON schema, dotted-path overrides and seed substreams.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use wwdecay_core::discretize::GridSpec;
use wwdecay_core::dynamics::SolverSpec;
use wwdecay_core::model::PhysicalSystem;
use wwdecay_core::resolvent::ContourSpec;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Vacuum,
    SingleDetector,
    Shell,
    ToyDynamics,
    RouteCompare,
    Sweep,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Vacuum => "vacuum",
            Scenario::SingleDetector => "single_detector",
            Scenario::Shell => "shell",
            Scenario::ToyDynamics => "toy_dynamics",
            Scenario::RouteCompare => "route_compare",
            Scenario::Sweep => "sweep",
        }
    }
}

/// Where the single detector atom sits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorSpec {
    /// Distance in units of `c/ω₀`.
    pub r: f64,
    /// Place both dipoles at `cos²θ = 1/3` to the axis; otherwise move the first
    /// configured detector atom to distance `r` along its own direction.
    pub magic_angle: bool,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        Self { r: 2.0, magic_angle: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShellSpec {
    pub n_atoms: usize,
    /// Shell radius `ω₀R/c`.
    pub radius_z: f64,
    pub samples: usize,
}

impl Default for ShellSpec {
    fn default() -> Self {
        Self { n_atoms: 100, radius_z: PI / 2.0, samples: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteModel {
    Vacuum,
    Toy,
    Full3d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Beta,
    R,
    NAtoms,
    NModes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
    /// Scenario run at each point; defaults by parameter (`n_atoms` → shell,
    /// `n_modes` → vacuum, otherwise single detector).
    #[serde(default)]
    pub scenario: Option<Scenario>,
    /// Also compare the two routes at every point (small models only).
    #[serde(default)]
    pub routes: bool,
}

impl SweepSpec {
    pub fn point_scenario(&self) -> Scenario {
        self.scenario.unwrap_or(match self.parameter {
            SweepParam::NAtoms => Scenario::Shell,
            SweepParam::NModes => Scenario::Vacuum,
            SweepParam::Beta | SweepParam::R => Scenario::SingleDetector,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Trajectory samples on `[0, horizon]`.
    pub samples: usize,
    pub plot_data: bool,
    /// Also write the discretized model as `model.csv`.
    pub dump_model: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), samples: 600, plot_data: true, dump_model: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub system: PhysicalSystem,
    pub grid: GridSpec,
    pub solver: SolverSpec,
    pub contour: ContourSpec,
    pub detector: DetectorSpec,
    pub shell: ShellSpec,
    pub route_model: RouteModel,
    pub sweep: Option<SweepSpec>,
    pub output: OutputSpec,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Vacuum,
            system: PhysicalSystem::default(),
            grid: GridSpec::default(),
            solver: SolverSpec::default(),
            contour: ContourSpec::default(),
            detector: DetectorSpec::default(),
            shell: ShellSpec::default(),
            route_model: RouteModel::Toy,
            sweep: None,
            output: OutputSpec::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Apply `key=value` overrides with dotted paths, e.g. `system.beta=0.02`.
    /// Values parse as JSON when possible and as strings otherwise.
    pub fn with_overrides(self, sets: &[String]) -> Result<Self, CliError> {
        if sets.is_empty() {
            return Ok(self);
        }
        let mut v = serde_json::to_value(&self).map_err(|e| CliError::Config(e.to_string()))?;
        for s in sets {
            let (key, raw) =
                s.split_once('=').ok_or_else(|| CliError::Config(format!("--set {s}: expected KEY=VALUE")))?;
            let val: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut v, key, val)?;
        }
        serde_json::from_value(v).map_err(|e| CliError::Config(format!("after --set: {e}")))
    }

    /// Structural checks that do not need the physics: exactly one sweep iff
    /// the scenario is a sweep, sane sample counts.
    pub fn check(&self) -> Result<(), CliError> {
        match (self.scenario, &self.sweep) {
            (Scenario::Sweep, None) => return Err(CliError::Config("scenario sweep needs a sweep section".into())),
            (Scenario::Sweep, Some(s)) if s.point_scenario() == Scenario::Sweep => {
                return Err(CliError::Config("sweep points cannot themselves be sweeps".into()))
            }
            (s, Some(_)) if s != Scenario::Sweep => {
                return Err(CliError::Config("sweep section given for a non-sweep scenario".into()))
            }
            _ => {}
        }
        if self.output.samples < 10 {
            return Err(CliError::Config("output.samples must be at least 10".into()));
        }
        Ok(())
    }

    /// Seed of the named random substream.
    pub fn substream(&self, name: &str) -> u64 {
        substream(self.seed, name)
    }
}

/// FNV-1a of `name` mixed into `seed`.
pub fn substream(seed: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed.rotate_left(17)
}

fn set_path(root: &mut Value, key: &str, val: Value) -> Result<(), CliError> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, p) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if cur.is_null() {
            *cur = Value::Object(Default::default());
        }
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert((*p).to_string(), val);
                    return Ok(());
                }
                map.entry((*p).to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(arr) => {
                let idx: usize =
                    p.parse().map_err(|_| CliError::Config(format!("--set {key}: '{p}' is not an index")))?;
                let len = arr.len();
                let slot = arr
                    .get_mut(idx)
                    .ok_or_else(|| CliError::Config(format!("--set {key}: index {idx} out of range ({len})")))?;
                if last {
                    *slot = val;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::Config(format!("--set {key}: '{p}' is not inside an object"))),
        };
    }
    Ok(())
}
