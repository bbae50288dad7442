use std::path::Path;

use entropy_rigidity::barycenter::BarycenterOptions;
use entropy_rigidity::entropy::CriticalExponentOptions;
use entropy_rigidity::geometry::{FactorSpec, ScaledProductMetric};
use entropy_rigidity::measures::SigmaFrame;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// `"optimal"` or explicit scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Beta {
    Named(String),
    Scales(Vec<f64>),
}

impl Default for Beta {
    fn default() -> Self {
        Beta::Named("optimal".into())
    }
}

impl Beta {
    pub fn metric(&self, factors: &[FactorSpec]) -> Result<ScaledProductMetric<f64>, CliError> {
        match self {
            Beta::Named(name) if name == "optimal" => Ok(ScaledProductMetric::optimal(factors.to_vec())?),
            Beta::Named(name) => Err(CliError::Config(format!("beta must be \"optimal\" or a list, got \"{name}\""))),
            Beta::Scales(s) => Ok(ScaledProductMetric::new(factors.to_vec(), s.clone())?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimalMetricConfig {
    pub factors: Vec<FactorSpec>,
    /// Volume of the unscaled product, multiplied into `ent_min`.
    #[serde(default = "one")]
    pub base_volume: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    pub factors: Vec<FactorSpec>,
    #[serde(default)]
    pub beta: Beta,
    pub s_bracket: [f64; 2],
    /// Spatial coordinates of the center; the basepoint if absent.
    #[serde(default)]
    pub y: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub estimator: CriticalExponentOptions,
}

fn default_times() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0]
}

fn default_ps_atoms() -> usize {
    100_000
}

fn default_angle() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsConcentrationConfig {
    pub factors: Vec<FactorSpec>,
    /// Per-factor direction of the ray; the first axis in every factor if absent.
    #[serde(default)]
    pub direction: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_ps_atoms")]
    pub n: usize,
    #[serde(default = "default_angle")]
    pub angle: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarycenterConfig {
    pub factors: Vec<FactorSpec>,
    #[serde(default)]
    pub beta: Beta,
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub s_multiplier: Option<f64>,
    #[serde(default)]
    pub y: Option<Vec<Vec<f64>>>,
    #[serde(rename = "N_z", alias = "n_z", default = "default_samples")]
    pub n_z: usize,
    #[serde(rename = "N_theta", alias = "n_theta", default = "default_samples")]
    pub n_theta: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub frame: SigmaFrame,
    #[serde(default)]
    pub solver: BarycenterOptions,
}

fn default_eps() -> f64 {
    1e-3
}

fn default_max_distance() -> f64 {
    2.0
}

fn default_slack() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacobianScanConfig {
    pub factors: Vec<FactorSpec>,
    #[serde(default)]
    pub beta: Beta,
    pub s_multiplier: f64,
    pub n_points: usize,
    #[serde(rename = "N_z", alias = "n_z", default = "default_samples")]
    pub n_z: usize,
    #[serde(rename = "N_theta", alias = "n_theta", default = "default_samples")]
    pub n_theta: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Points are drawn with `d(p, y) <= max_distance` in `g_β`.
    #[serde(default = "default_max_distance")]
    pub max_distance: f64,
    #[serde(default = "default_slack")]
    pub bound_slack: f64,
    /// The first this many points also get a step-halving check.
    #[serde(default)]
    pub richardson_points: usize,
    #[serde(default)]
    pub frame: SigmaFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma55Config {
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_block_slack() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockdetConfig {
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_block_slack")]
    pub slack: f64,
}

/// Read the optional config file, apply inline overrides and validate.
pub fn load<T: DeserializeOwned + Serialize>(
    path: Option<&Path>,
    overrides: Map<String, Value>,
) -> Result<(T, Value), CliError> {
    let mut base = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            match serde_json::from_str::<Value>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            {
                Value::Object(m) => m,
                _ => return Err(CliError::Config("config must be a JSON object".into())),
            }
        }
        None => Map::new(),
    };
    base.extend(overrides);
    let config: T = serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Config(e.to_string()))?;
    let echo = serde_json::to_value(&config).map_err(|e| CliError::Config(e.to_string()))?;
    Ok((config, echo))
}
