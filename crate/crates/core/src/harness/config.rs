//! One configuration tree for every stage, layered as defaults, then an
//! optional TOML file, then `key.path=value` overrides.
//!
//! A few values are shared between sections. Each has one owner and the
//! copies are filled in from it; setting a copy to something else is an
//! error.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::encoders::EncoderConfig;
use crate::error::{Error, Result};
use crate::fusion::{FusionConfig, GnnConfig, TrainConfig};
use crate::planner::PlannerConfig;
use crate::reliability::ReliabilityParams;
use crate::simworld::{Difficulty, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecordConfig {
    pub episodes: usize,
    /// Difficulty of episode `i` is `mix[i % mix.len()]`.
    pub mix: Vec<Difficulty>,
    pub max_steps: usize,
    /// Probability of steering toward the goal instead of a random turn.
    pub goal_bias: f64,
    /// Probability of resampling the command from the dynamic window each step.
    pub change_prob: f64,
    /// Probability that a resampled proposal is drawn from the reachable
    /// commands whose rollout fails, when there are any.
    pub hazard_bias: f64,
    /// Execute a ground-truth-safe command whenever the proposed one fails;
    /// the sample still records the proposal.
    pub supervised: bool,
}

impl Default for RecordConfig {
    fn default() -> Self {
        Self {
            episodes: 40,
            mix: vec![
                Difficulty::Cluttered,
                Difficulty::Combined,
                Difficulty::Dark,
                Difficulty::Occluded,
                Difficulty::Open,
            ],
            max_steps: 100,
            goal_bias: 0.5,
            change_prob: 0.5,
            hazard_bias: 0.9,
            supervised: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub episodes: usize,
    pub difficulties: Vec<Difficulty>,
    /// World seeds are `seed_offset + episode index`.
    pub seed_offset: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 50,
            difficulties: vec![Difficulty::Open, Difficulty::Cluttered],
            seed_offset: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub seed: u64,
    /// Fraction of episodes used for training; the rest validate.
    pub train_fraction: f64,
    /// Probability threshold for per-step accuracy.
    pub accuracy_threshold: f64,
    pub record: RecordConfig,
    pub eval: EvalConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            train_fraction: 0.8,
            accuracy_threshold: 0.5,
            record: RecordConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub simworld: SimConfig,
    pub reliability: ReliabilityParams,
    pub encoders: EncoderConfig,
    pub fusion: GnnConfig,
    pub train: TrainConfig,
    pub planner: PlannerConfig,
    pub harness: HarnessConfig,
}

/// `(copy, owner)` pairs of dotted paths.
const SHARED: &[(&str, &str)] = &[
    ("encoders.horizon", "planner.horizon"),
    ("encoders.v_max", "planner.v_max"),
    ("encoders.omega_max", "planner.omega_max"),
    ("simworld.episode.v_max", "planner.v_max"),
    ("simworld.episode.omega_max", "planner.omega_max"),
    ("encoders.image_width", "simworld.camera.width"),
    ("encoders.image_height", "simworld.camera.height"),
    ("planner.window.width", "simworld.camera.width"),
    ("planner.window.height", "simworld.camera.height"),
];

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn lookup<'a>(root: &'a Table, path: &str) -> Option<&'a Value> {
    let mut parts = path.split('.');
    let mut cur = root.get(parts.next()?)?;
    for p in parts {
        cur = cur.as_table()?.get(p)?;
    }
    Some(cur)
}

fn lookup_mut<'a>(root: &'a mut Table, path: &str) -> Option<&'a mut Value> {
    let mut parts = path.split('.');
    let mut cur = root.get_mut(parts.next()?)?;
    for p in parts {
        cur = cur.as_table_mut()?.get_mut(p)?;
    }
    Some(cur)
}

/// Overlays `layer` onto `base`. Tables merge recursively; any other value
/// replaces the default. Keys absent from the defaults are rejected.
fn merge(base: &mut Table, layer: Table, prefix: &str, set: &mut BTreeSet<String>) -> Result<()> {
    for (key, value) in layer {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        let slot = base
            .get_mut(&key)
            .ok_or_else(|| config_err(format!("unknown key '{path}'")))?;
        match (slot, value) {
            (Value::Table(b), Value::Table(l)) => merge(b, l, &path, set)?,
            (Value::Table(_), _) => return Err(config_err(format!("'{path}' is a section"))),
            (slot, value) => {
                *slot = coerce(slot, value, &path)?;
                set.insert(path);
            }
        }
    }
    Ok(())
}

/// Integers are accepted where floats are expected.
fn coerce(default: &Value, value: Value, path: &str) -> Result<Value> {
    match (default, value) {
        (Value::Float(_), Value::Integer(i)) => Ok(Value::Float(i as f64)),
        (d, v) if std::mem::discriminant(d) == std::mem::discriminant(&v) => Ok(v),
        (d, v) => Err(config_err(format!(
            "'{path}' expects a {}, got {}",
            d.type_str(),
            v.type_str()
        ))),
    }
}

/// Parses one `key.path=value` override into a nested table. The value is
/// read as a TOML literal, falling back to a bare string.
pub fn parse_override(spec: &str) -> Result<Table> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_err(format!("override '{spec}' is not key=value")))?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(config_err(format!("override '{spec}' has an empty key")));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    let mut keys: Vec<&str> = path.split('.').collect();
    let last = keys.pop().expect("non-empty path");
    let mut table = Table::new();
    table.insert(last.to_string(), value);
    for k in keys.into_iter().rev() {
        let mut outer = Table::new();
        outer.insert(k.to_string(), Value::Table(table));
        table = outer;
    }
    Ok(table)
}

impl Config {
    pub fn to_table(&self) -> Result<Table> {
        Table::try_from(self).map_err(|e| config_err(e.to_string()))
    }

    /// Resolves defaults, then each TOML layer in order, then overrides.
    pub fn layered(layers: &[Table], overrides: &[String]) -> Result<Self> {
        let mut tree = Config::default().to_table()?;
        let mut set = BTreeSet::new();
        for layer in layers {
            merge(&mut tree, layer.clone(), "", &mut set)?;
        }
        for o in overrides {
            merge(&mut tree, parse_override(o)?, "", &mut set)?;
        }
        for &(copy, owner) in SHARED {
            let owned = lookup(&tree, owner).cloned().expect("owner path exists");
            if set.contains(copy) && lookup(&tree, copy) != Some(&owned) {
                return Err(config_err(format!(
                    "'{copy}' follows '{owner}'; set '{owner}' instead"
                )));
            }
            *lookup_mut(&mut tree, copy).expect("copy path exists") = owned;
        }
        let cfg: Config = Value::Table(tree)
            .try_into()
            .map_err(|e: toml::de::Error| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let layers = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                vec![text
                    .parse::<Table>()
                    .map_err(|e| config_err(format!("{}: {e}", p.display())))?]
            }
            None => Vec::new(),
        };
        Self::layered(&layers, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        self.encoders.validate()?;
        self.fusion.validate()?;
        self.train.validate()?;
        self.planner.validate()?;
        self.reliability.image.validate()?;
        self.reliability.cloud.validate()?;
        let h = &self.harness;
        if !(h.train_fraction > 0.0 && h.train_fraction < 1.0) {
            return Err(config_err("harness.train_fraction must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&h.accuracy_threshold) {
            return Err(config_err("harness.accuracy_threshold must lie in [0, 1]"));
        }
        let r = &h.record;
        if r.mix.is_empty() || r.max_steps == 0 {
            return Err(config_err("harness.record needs a non-empty mix and max_steps"));
        }
        if !(0.0..=1.0).contains(&r.goal_bias) || !(0.0..=1.0).contains(&r.change_prob) {
            return Err(config_err("harness.record probabilities must lie in [0, 1]"));
        }
        if h.eval.difficulties.is_empty() {
            return Err(config_err("harness.eval.difficulties must not be empty"));
        }
        Ok(())
    }

    pub fn fusion_config(&self) -> FusionConfig {
        FusionConfig {
            encoders: self.encoders.clone(),
            gnn: self.fusion.clone(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    /// Hash of everything that shapes a recorded observation.
    pub fn observation_hash(&self) -> Result<[u8; 32]> {
        #[derive(Serialize)]
        struct Shape<'a> {
            simworld: &'a SimConfig,
            planner: &'a PlannerConfig,
        }
        let text = toml::to_string(&Shape {
            simworld: &self.simworld,
            planner: &self.planner,
        })
        .map_err(|e| config_err(e.to_string()))?;
        Ok(Sha256::digest(text.as_bytes()).into())
    }
}
