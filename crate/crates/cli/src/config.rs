//! Chart configuration files (TOML, or JSON when the extension is `.json`).

use std::path::Path;

use rrcv::Direction;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    pub theta: Option<OneOrMany<f64>>,
    pub eta: Option<OneOrMany<f64>>,
    pub slope: Option<OneOrMany<f64>>,
    pub reps: Option<OneOrMany<u32>>,
}

/// A precomputed control limit to monitor with.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LimitSpec {
    pub rule: String,
    pub direction: Direction,
    pub limit: f64,
    pub label: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub taus: Option<Vec<f64>>,
    /// `[lo, hi]` shift ranges for EARL.
    pub ranges: Option<Vec<[f64; 2]>>,
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub replications: Option<u64>,
    pub max_run_length: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChartConfigFile {
    pub n: Option<OneOrMany<usize>>,
    pub gamma0: Option<OneOrMany<f64>>,
    pub arl0: Option<f64>,
    pub force: Option<bool>,
    pub rules: Option<Vec<String>>,
    pub direction: Option<String>,
    pub measurement: Option<MeasurementSection>,
    pub limits: Option<Vec<LimitSpec>>,
    pub grid: Option<GridSection>,
    pub simulation: Option<SimulationSection>,
}

impl ChartConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        };
        cfg.check_finite()?;
        Ok(cfg)
    }

    fn check_finite(&self) -> Result<(), CliError> {
        let mut values: Vec<f64> = Vec::new();
        let mut add =
            |v: &Option<OneOrMany<f64>>| values.extend(v.iter().flat_map(OneOrMany::to_vec));
        add(&self.gamma0);
        if let Some(m) = &self.measurement {
            add(&m.theta);
            add(&m.eta);
            add(&m.slope);
        }
        values.extend(self.arl0);
        values.extend(self.limits.iter().flatten().map(|l| l.limit));
        if let Some(g) = &self.grid {
            values.extend(g.taus.iter().flatten());
            values.extend(g.ranges.iter().flatten().flatten());
        }
        match values.iter().find(|v| !v.is_finite()) {
            Some(v) => Err(CliError::Usage(format!(
                "configuration holds a non-finite number ({v})"
            ))),
            None => Ok(()),
        }
    }
}
