//! Run configuration: built-in defaults, then an optional JSON file merged
//! over them, then `--set path=value` overrides.

use std::path::Path;

use cohawkes::cluster::{DyckOverflow, MarkLaw, MarkedParams};
use cohawkes::queue::{Preset, QuadParams, QueueConfig};
use cohawkes::{InteractionParams, ResponseKernel, SlowdownSpec};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ClusterMethod {
    Thinning,
    Parking,
    MarkedThinning,
    DyckCluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ClusterSection {
    pub method: ClusterMethod,
    pub count: usize,
    pub overflow: DyckOverflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SweepKSection {
    pub grid: Vec<f64>,
    /// Replications per grid point.
    pub reps: usize,
    /// Replications for each asynchrony-limit mean.
    pub means_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SweepRhoSection {
    pub rho_total: f64,
    pub rho1_grid: Vec<f64>,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QueueSection {
    pub preset: Preset,
    /// Explicit kernels; takes precedence over `preset`.
    pub quad: Option<QuadParams>,
    pub arrival_rate: f64,
    pub patience_rate: f64,
    pub closure_target: f64,
    pub horizon: f64,
    pub replications: usize,
    pub kappas: Vec<usize>,
    pub sigmas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub interaction: InteractionParams,
    pub marked: MarkedParams,
    pub slowdown: SlowdownSpec,
    pub cluster: ClusterSection,
    pub sweep_k: SweepKSection,
    pub sweep_rho: SweepRhoSection,
    pub queue: QueueSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let exp = |mass: f64, beta: f64| ResponseKernel::exponential_with_mass(mass, beta).expect("valid default");
        Self {
            seed: 1,
            interaction: InteractionParams {
                g1: exp(0.25, 1.0),
                g2: exp(0.25, 1.0),
                eta: 1.0,
            },
            marked: MarkedParams {
                kernel: exp(0.3, 1.0),
                mark_law: MarkLaw::Borel { rho: 0.2 },
            },
            slowdown: SlowdownSpec::Polynomial { sigma: 2.0 },
            cluster: ClusterSection {
                method: ClusterMethod::Parking,
                count: 1,
                overflow: DyckOverflow::Reject,
            },
            sweep_k: SweepKSection {
                grid: vec![0.25, 0.4, 0.55, 0.7, 0.85, 1.0, 1.2, 1.4, 1.7, 2.0, 2.5, 3.0],
                reps: 10_000,
                means_reps: 10_000,
            },
            sweep_rho: SweepRhoSection {
                rho_total: 0.5,
                rho1_grid: vec![0.025, 0.0625, 0.125, 0.1875, 0.225, 0.25, 0.275, 0.3125, 0.375, 0.4375, 0.475],
                reps: 10_000,
            },
            queue: QueueSection {
                preset: Preset::ModerateCo,
                quad: None,
                arrival_rate: 16.0,
                patience_rate: 0.5,
                closure_target: 0.9,
                horizon: 200.0,
                replications: 64,
                kappas: (1..=12).collect(),
                sigmas: vec![1.3, 1.0 / 1.3],
            },
        }
    }
}

impl RunConfig {
    /// Defaults, merged with `file` if given, then with each `path=value`
    /// override. Values parse as JSON and fall back to plain strings.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut value = serde_json::to_value(RunConfig::default()).expect("defaults serialize");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let parsed: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{} is not valid JSON: {e}", path.display())))?;
            merge(&mut value, parsed);
        }
        for ov in overrides {
            let (key, raw) = ov
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override '{ov}' is not of the form key=value")))?;
            let v = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut value, key, v)?;
        }
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
    }

    pub fn quad(&self) -> QuadParams {
        self.queue.quad.unwrap_or_else(|| self.queue.preset.params())
    }

    /// Queue template for `sweep_kappa`; concurrency and slowdown are set per
    /// cell.
    pub fn queue_template(&self) -> QueueConfig {
        QueueConfig {
            arrival_rate: self.queue.arrival_rate,
            patience_rate: self.queue.patience_rate,
            max_concurrency: self.queue.kappas.first().copied().unwrap_or(1),
            closure_target: self.queue.closure_target,
            slowdown: self.slowdown,
            quad: self.quad(),
            horizon: self.queue.horizon,
            replications: self.queue.replications,
            seed: self.seed,
        }
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(root: &mut Value, key: &str, v: Value) -> Result<(), CliError> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(CliError::Config(format!("override key '{key}' has an empty segment")));
        }
        if cur.is_null() {
            *cur = Value::Object(Map::new());
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override key '{key}': '{part}' is not inside a record")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), v);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!("split yields at least one segment")
}
