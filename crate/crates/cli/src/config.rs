//! Flat `key = value` experiment files with dotted keys.
//!
//! ```text
//! # comment
//! env.name = navigation
//! env.num_agents = 3
//! arch.critic = segnn
//! arch.actor = segnn
//! seeds = 0, 1, 2
//! output.dir = nav3
//! training.episodes = 2000
//! graph.edge_mode = knn
//! graph.knn_k = 3
//! ```
//!
//! `training.*` and `env.*` keys override fields of the training and
//! navigation configs by name; values are typed by the field they replace.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::Value;
use symmarl::envs::NavConfig;
use symmarl::graph::{EdgeMode, GraphConfig};
use symmarl::marl::{Arch, TrainingConfig};

use crate::error::CliError;

pub const OUTPUT_ROOT_VAR: &str = "SYMMARL_OUTPUT_ROOT";

const REQUIRED: [&str; 5] = ["env.name", "env.num_agents", "arch.critic", "arch.actor", "seeds"];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub env_name: String,
    pub training: TrainingConfig,
    pub seeds: Vec<u64>,
    /// As written in the file; see [`ExperimentConfig::output_dir`].
    pub output: PathBuf,
}

impl ExperimentConfig {
    /// `"[<critic>, <actor>]"`.
    pub fn label(&self) -> String {
        self.training.label()
    }

    /// Training config of one seed.
    pub fn for_seed(&self, seed: u64) -> TrainingConfig {
        TrainingConfig {
            seed,
            ..self.training.clone()
        }
    }

    /// The output directory, placed under `$SYMMARL_OUTPUT_ROOT` when that is set.
    pub fn output_dir(&self) -> PathBuf {
        resolve_output(&self.output)
    }
}

pub fn resolve_output(p: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) if !root.is_empty() => Path::new(&root).join(p),
        _ => p.to_path_buf(),
    }
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

/// `key = value` pairs; later duplicates are an error.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("line {}: expected `key = value`, got {raw:?}", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k.split('.').any(str::is_empty) {
            return Err(usage(format!("line {}: malformed key {k:?}", n + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(usage(format!("line {}: duplicate key `{k}`", n + 1)));
        }
    }
    Ok(out)
}

/// Replaces `obj[field]` by `raw` parsed with the type of the current value.
fn override_field(obj: &mut Value, field: &str, raw: &str, key: &str) -> Result<(), CliError> {
    let map = obj.as_object_mut().expect("configs serialise to objects");
    let slot = map.get_mut(field).ok_or_else(|| usage(format!("unknown config field `{key}`")))?;
    let bad = |what: &str| usage(format!("field `{key}`: expected {what}, got {raw:?}"));
    *slot = match slot {
        Value::Bool(_) => Value::Bool(raw.parse().map_err(|_| bad("true or false"))?),
        Value::String(_) => Value::String(raw.to_string()),
        // Optional numbers such as the gradient clip accept `none`.
        _ if raw == "none" => Value::Null,
        Value::Number(n) if n.is_u64() => Value::from(raw.parse::<u64>().map_err(|_| bad("a non-negative integer"))?),
        _ => Value::from(raw.parse::<f64>().map_err(|_| bad("a number"))?),
    };
    Ok(())
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let pairs = parse_pairs(text)?;
    for key in REQUIRED {
        if !pairs.contains_key(key) {
            return Err(usage(format!("missing required field `{key}`")));
        }
    }
    let env_name = pairs["env.name"].to_ascii_lowercase();
    if env_name != "navigation" {
        return Err(usage(format!("field `env.name`: unknown environment {env_name:?} (expected navigation)")));
    }
    let n: usize = pairs["env.num_agents"]
        .parse()
        .map_err(|_| usage(format!("field `env.num_agents`: expected a positive integer, got {:?}", pairs["env.num_agents"])))?;
    let arch = |key: &str| -> Result<Arch, CliError> { pairs[key].parse().map_err(|e| usage(format!("field `{key}`: {e}"))) };

    let mut training = serde_json::to_value(TrainingConfig {
        env: NavConfig::new(n),
        critic_arch: arch("arch.critic")?,
        actor_arch: arch("arch.actor")?,
        ..Default::default()
    })
    .expect("config serialises");
    let mut graph = GraphConfig::default();
    let mut knn_k = None;
    let mut edge_mode = None;
    let mut output = PathBuf::from("runs");

    for (key, raw) in &pairs {
        match key.split_once('.') {
            _ if REQUIRED.contains(&key.as_str()) => {}
            Some(("env", field)) => override_field(&mut training["env"], field, raw, key)?,
            Some(("training", "env" | "graph" | "critic_arch" | "actor_arch" | "seed")) => {
                return Err(usage(format!("field `{key}` is set through its own section")))
            }
            Some(("training", field)) => override_field(&mut training, field, raw, key)?,
            Some(("graph", "include_actions")) => {
                graph.include_actions = raw.parse().map_err(|_| usage(format!("field `{key}`: expected true or false")))?
            }
            Some(("graph", "edge_mode")) => edge_mode = Some(raw.to_ascii_lowercase()),
            Some(("graph", "knn_k")) => {
                knn_k = Some(raw.parse::<usize>().map_err(|_| usage(format!("field `{key}`: expected a positive integer")))?)
            }
            Some(("output", "dir")) => output = PathBuf::from(raw),
            _ => return Err(usage(format!("unknown config field `{key}`"))),
        }
    }
    graph.edge_mode = match (edge_mode.as_deref(), knn_k) {
        (None | Some("complete"), None) => EdgeMode::Complete,
        (Some("knn"), Some(k)) => EdgeMode::Knn(k),
        (Some("knn"), None) => return Err(usage("missing required field `graph.knn_k` for knn edges".into())),
        (None | Some("complete"), Some(_)) => return Err(usage("field `graph.knn_k` needs `graph.edge_mode = knn`".into())),
        (Some(other), _) => return Err(usage(format!("field `graph.edge_mode`: unknown mode {other:?}"))),
    };
    training["graph"] = serde_json::to_value(graph).expect("graph config serialises");
    let training: TrainingConfig = serde_json::from_value(training).map_err(|e| usage(format!("invalid config: {e}")))?;
    training.validate().map_err(|e| usage(format!("invalid config: {e}")))?;

    let seeds = pairs["seeds"]
        .split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|_| usage(format!("field `seeds`: bad seed {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if seeds.is_empty() {
        return Err(usage("field `seeds`: at least one seed is required".into()));
    }
    Ok(ExperimentConfig {
        env_name,
        training,
        seeds,
        output,
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}
