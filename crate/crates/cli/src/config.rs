//! Versioned JSON run configuration.

use std::path::Path;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};
use tensorconc::ensembles::SpectrumSpec;
use tensorconc::experiments::ExperimentPlan;

pub const SCHEMA_VERSION: u32 = 1;

/// Closed-form rate inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateInput {
    #[serde(rename = "N")]
    pub n: u64,
    pub spectra: Vec<SpectrumSpec>,
    /// Per-class `γ_k` and `dψ2_k` for the multi-product bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem23: Option<Theorem23Input>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Theorem23Input {
    pub gamma: Vec<f64>,
    pub dpsi2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Rates(RateInput),
    Plan(ExperimentPlan),
}

/// A versioned config document holding exactly one of `rates` or `plan`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct RunConfig {
    pub schema_version: u32,
    pub payload: Payload,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rates: Option<RateInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plan: Option<ExperimentPlan>,
}

impl TryFrom<RawConfig> for RunConfig {
    type Error = String;

    fn try_from(raw: RawConfig) -> std::result::Result<Self, String> {
        let payload = match (raw.rates, raw.plan) {
            (Some(r), None) => Payload::Rates(r),
            (None, Some(p)) => Payload::Plan(p),
            _ => return Err("expected exactly one of `rates` or `plan`".into()),
        };
        Ok(Self { schema_version: raw.schema_version, payload })
    }
}

impl From<RunConfig> for RawConfig {
    fn from(c: RunConfig) -> Self {
        let (rates, plan) = match c.payload {
            Payload::Rates(r) => (Some(r), None),
            Payload::Plan(p) => (None, Some(p)),
        };
        Self { schema_version: c.schema_version, rates, plan }
    }
}

impl RunConfig {
    pub fn plan(&self) -> Result<&ExperimentPlan> {
        match &self.payload {
            Payload::Plan(p) => Ok(p),
            Payload::Rates(_) => bail!("config holds rate inputs, but this command needs a \"plan\""),
        }
    }

    pub fn rates(&self) -> Result<&RateInput> {
        match &self.payload {
            Payload::Rates(r) => Ok(r),
            Payload::Plan(_) => bail!("config holds a plan, but this command needs \"rates\""),
        }
    }
}

/// A schema or validation failure in user-supplied configuration.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn config_error(msg: String) -> anyhow::Error {
    ConfigError(msg).into()
}

/// Parses and validates a config; errors name the offending field path.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| config_error(format!("invalid config at `{}`: {}", e.path(), e.inner())))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(config_error(format!(
            "invalid config at `schema_version`: expected {SCHEMA_VERSION}, got {}",
            cfg.schema_version
        )));
    }
    match &cfg.payload {
        Payload::Plan(p) => p.validate().map_err(|e| config_error(format!("invalid config at `plan`: {e}")))?,
        Payload::Rates(r) => {
            if r.n < 2 {
                return Err(config_error(format!("invalid config at `rates.N`: need N >= 2, got {}", r.n)));
            }
            if r.spectra.len() < 2 {
                return Err(config_error("invalid config at `rates.spectra`: need p >= 2 spectra".into()));
            }
            for (k, s) in r.spectra.iter().enumerate() {
                s.validate().map_err(|e| config_error(format!("invalid config at `rates.spectra[{k}]`: {e}")))?;
            }
            if let Some(t) = &r.theorem23 {
                if t.gamma.len() != r.spectra.len() || t.dpsi2.len() != r.spectra.len() {
                    return Err(config_error(
                        "invalid config at `rates.theorem23`: gamma and dpsi2 need one entry per spectrum".into(),
                    ));
                }
            }
        }
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}
