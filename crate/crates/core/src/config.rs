//! Run configuration shared by all commands.

use std::path::{Path, PathBuf};

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::baseline::{BaselineKind, DEFAULT_AR_MAX_ORDER, DEFAULT_VAR_MAX_ORDER};
use crate::error::{Error, Result};
use crate::evaluation::EvaluationConfig;
use crate::forecast::ForecastConfig;
use crate::irwls::FitConfig;
use crate::synthetic::{default_start, Simulation, SyntheticSpec};
use crate::timeseries::{
    decompose, interpolate_gaps, read_observations, regular_timestamps, StateMatrix, DEFAULT_MAX_GAP_FRACTION,
    STEP_MINUTES,
};

pub const DEFAULT_SPLIT_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub kinds: Vec<BaselineKind>,
    pub ar_max_order: usize,
    pub var_max_order: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            kinds: vec![BaselineKind::Persistence, BaselineKind::Ar, BaselineKind::Var],
            ar_max_order: DEFAULT_AR_MAX_ORDER,
            var_max_order: DEFAULT_VAR_MAX_ORDER,
        }
    }
}

impl BaselineConfig {
    pub fn max_order(&self, kind: BaselineKind) -> usize {
        match kind {
            BaselineKind::Persistence => 0,
            BaselineKind::Ar => self.ar_max_order,
            BaselineKind::Var => self.var_max_order,
        }
    }
}

/// Everything a command needs. Serializing it reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Observation CSV. Exactly one of `data` and `synthetic` must be set.
    pub data: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
    pub max_gap_fraction: f64,
    /// First out-of-sample timestamp (RFC 3339). When absent the split falls
    /// at `split_fraction` of the rows.
    pub split: Option<String>,
    pub split_fraction: f64,
    pub fit: FitConfig,
    pub forecast: ForecastConfig,
    pub evaluation: EvaluationConfig,
    pub baselines: BaselineConfig,
    /// Re-estimate the model at every evaluation origin.
    pub rolling: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            synthetic: None,
            max_gap_fraction: DEFAULT_MAX_GAP_FRACTION,
            split: None,
            split_fraction: DEFAULT_SPLIT_FRACTION,
            fit: FitConfig::default(),
            forecast: ForecastConfig::default(),
            evaluation: EvaluationConfig::default(),
            baselines: BaselineConfig::default(),
            rolling: false,
            output_dir: None,
        }
    }
}

/// States ready for fitting, with their wall-clock timestamps.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub states: StateMatrix,
    pub timestamps: Vec<DateTime<FixedOffset>>,
    pub simulation: Option<Simulation>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(e) => Error::Config(format!("{}: {e}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.data, &self.synthetic) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("set either `data` or `synthetic`, not both".to_string()));
            }
            (None, None) => return Err(Error::Config("no `data` path or `synthetic` spec given".to_string())),
            (None, Some(spec)) => spec.validate()?,
            _ => {}
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config("split_fraction must lie in (0, 1)".to_string()));
        }
        if let Some(s) = &self.split {
            parse_timestamp(s)?;
        }
        self.fit.validate()?;
        self.forecast.validate()?;
        self.evaluation.validate()
    }

    /// Sets the value at a dotted key path such as `fit.lags.j1`. The value
    /// is parsed as JSON and falls back to a plain string.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let mut root = serde_json::to_value(&*self)?;
        let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let parts: Vec<&str> = key.split('.').collect();
        let mut node = &mut root;
        for (i, part) in parts.iter().enumerate() {
            let last = i + 1 == parts.len();
            let obj = match node {
                Value::Object(map) => map,
                Value::Null => {
                    *node = Value::Object(Default::default());
                    node.as_object_mut().expect("just created")
                }
                _ => return Err(Error::Config(format!("`{key}`: `{part}` is not inside an object"))),
            };
            if last {
                if !obj.contains_key(*part) && !optional_key(&parts[..i]) {
                    return Err(Error::Config(format!("unknown configuration key `{key}`")));
                }
                obj.insert(part.to_string(), value.clone());
                break;
            }
            if !obj.contains_key(*part) {
                return Err(Error::Config(format!("unknown configuration key `{key}`")));
            }
            node = obj.get_mut(*part).expect("checked");
        }
        *self = serde_json::from_value(root).map_err(|e| Error::Config(format!("`{key}`: {e}")))?;
        Ok(())
    }

    /// Loads, gap-fills and decomposes the observations, or simulates the
    /// synthetic spec.
    pub fn load_data(&self) -> Result<LoadedData> {
        if let Some(path) = &self.data {
            let frame = read_observations(path)?;
            let frame = interpolate_gaps(&frame, self.max_gap_fraction)?;
            let states = decompose(&frame)?;
            return Ok(LoadedData {
                states,
                timestamps: frame.timestamps().to_vec(),
                simulation: None,
            });
        }
        let spec = self
            .synthetic
            .as_ref()
            .ok_or_else(|| Error::Config("no `data` path or `synthetic` spec given".to_string()))?;
        let sim = spec.simulate()?;
        let start = default_start() + chrono::Duration::minutes(STEP_MINUTES * spec.start_index);
        Ok(LoadedData {
            timestamps: regular_timestamps(start, sim.states.len()),
            states: sim.states.clone(),
            simulation: Some(sim),
        })
    }

    /// Index of the first out-of-sample row.
    pub fn split_row(&self, data: &LoadedData) -> Result<usize> {
        let n = data.states.len();
        let row = match &self.split {
            Some(s) => {
                let ts = parse_timestamp(s)?;
                data.timestamps.iter().position(|t| *t >= ts).unwrap_or(n)
            }
            None => (n as f64 * self.split_fraction).round() as usize,
        };
        if row == 0 || row >= n {
            return Err(Error::Config(format!(
                "split leaves an empty in-sample or out-of-sample part ({row} of {n} rows)"
            )));
        }
        Ok(row)
    }
}

/// Parent paths under which new keys may be created.
fn optional_key(parents: &[&str]) -> bool {
    matches!(parents, ["synthetic"] | ["fit", "lasso"])
}

pub fn parse_timestamp(s: &str) -> Result<DateTime<FixedOffset>> {
    DateTime::parse_from_rfc3339(s).map_err(|e| Error::Config(format!("bad timestamp `{s}`: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_overrides_nested_keys() {
        let mut c = RunConfig::default();
        c.set("fit.lags.j1", "[1,2,3]").unwrap();
        c.set("forecast.n_paths", "0").unwrap();
        c.set("data", "x.csv").unwrap();
        assert_eq!(c.fit.lags.j1, vec![1, 2, 3]);
        assert_eq!(c.forecast.n_paths, 0);
        assert_eq!(c.data, Some(PathBuf::from("x.csv")));
        assert!(c.set("fit.nope", "1").is_err());
        assert!(c.set("nope", "1").is_err());
        assert!(RunConfig::from_json(r#"{"nope": 1}"#).is_err());
        assert!(c.set("forecast.n_paths", "\"many\"").is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut c = RunConfig::default();
        c.synthetic = Some(SyntheticSpec::demo());
        let back = RunConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
