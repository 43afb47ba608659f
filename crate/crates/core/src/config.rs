//! Resolved experiment configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gw::{OffspringLaw, DEFAULT_NODE_CAP};
use crate::observables::Beta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Tree,
    Simulate,
    FreeEnergyMap,
    Clt,
    Martingale,
    SmoothingCheck,
    Phase,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Tree => "tree",
            Command::Simulate => "simulate",
            Command::FreeEnergyMap => "free-energy-map",
            Command::Clt => "clt",
            Command::Martingale => "martingale",
            Command::SmoothingCheck => "smoothing-check",
            Command::Phase => "phase",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub beta: Beta,
    pub rho: f64,
    pub t: f64,
    pub r: f64,
    /// Endpoint barrier constant `A`.
    pub a: f64,
    /// Path barrier exponent.
    pub gamma: f64,
    pub replicas: u64,
    pub seed: u64,
    /// `binary`, or comma-separated `p_0,p_1,...`.
    pub offspring: String,
    pub horizons: Vec<f64>,
    pub p: f64,
    pub grid_n: usize,
    pub grid_max: f64,
    /// Grid points closer than this to a phase boundary are skipped.
    pub margin: f64,
    pub cap: u64,
    pub threads: Option<usize>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(command: Command, seed: u64) -> Self {
        Self {
            command,
            beta: Beta::new(0.0, 0.0),
            rho: 0.0,
            t: 10.0,
            r: 5.0,
            a: 4.0,
            gamma: 0.75,
            replicas: 1000,
            seed,
            offspring: "binary".into(),
            horizons: vec![10.0],
            p: 2.0,
            grid_n: 9,
            grid_max: 1.5,
            margin: 0.0,
            cap: DEFAULT_NODE_CAP,
            threads: None,
            format: Format::Text,
            out: None,
            csv: None,
        }
    }

    pub fn law(&self) -> Result<OffspringLaw> {
        parse_offspring(&self.offspring)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// The part of the configuration that determines the results; output
    /// locations and the thread count are left out.
    pub fn fingerprint(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            for key in ["threads", "format", "out", "csv"] {
                map.remove(key);
            }
        }
        v
    }
}

/// `binary` or a list of probabilities `p_0,p_1,...`.
pub fn parse_offspring(spec: &str) -> Result<OffspringLaw> {
    let spec = spec.trim();
    if spec.eq_ignore_ascii_case("binary") {
        return Ok(OffspringLaw::binary());
    }
    let probs = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidOffspringLaw(format!("cannot parse '{s}'")))
        })
        .collect::<Result<Vec<f64>>>()?;
    OffspringLaw::new(probs)
}
