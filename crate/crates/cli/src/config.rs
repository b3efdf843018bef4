//! Flat JSON experiment configs.
//!
//! A config is a single JSON object: the common keys (`subcommand`,
//! `master_seed`, `output_dir`, `budget`, `description`) plus the keys of
//! one subcommand. Unknown keys are rejected and the resolved config, with
//! every default filled in, is what gets echoed into the manifest.

use dynperc::lattice::{Boundary, Topology};
use dynperc::percolation::DEFAULT_BUDGET;
use dynperc::FrequencyModel;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

pub const SUBCOMMANDS: [&str; 6] = ["simulate", "two-colour", "meanfield", "correlations", "analytic-p", "lattice-dump"];

const COMMON_KEYS: [&str; 5] = ["subcommand", "master_seed", "output_dir", "budget", "description"];

/// Evenly spaced time points including both ends, or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    List(Vec<f64>),
    Range(TimeRange),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeRange {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid::Range(TimeRange { start: 0.0, stop: 30.0, points: 600 })
    }
}

impl TimeGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let out = match self {
            TimeGrid::List(v) => v.clone(),
            TimeGrid::Range(r) => {
                if r.points == 0 || !(r.stop >= r.start) {
                    return Err(CliError::config("times range needs points >= 1 and stop >= start"));
                }
                if r.points == 1 {
                    vec![r.start]
                } else {
                    let h = (r.stop - r.start) / (r.points - 1) as f64;
                    (0..r.points).map(|i| r.start + h * i as f64).collect()
                }
            }
        };
        if out.is_empty() {
            return Err(CliError::config("times must be nonempty"));
        }
        Ok(out)
    }
}

/// A scalar or a list of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn default_four() -> usize {
    4
}
fn default_twenty() -> usize {
    20
}
fn default_side() -> usize {
    256
}
fn default_true() -> bool {
    true
}
fn default_grid_step() -> f64 {
    0.02
}
fn default_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    1_000_000
}
fn default_k_max() -> usize {
    100
}
fn default_p_points() -> usize {
    201
}
fn default_static_samples() -> usize {
    100
}
fn default_line_points() -> usize {
    101
}
fn default_motif_samples() -> usize {
    1_000_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulateMode {
    #[default]
    Trajectory,
    Static,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    #[serde(default)]
    pub mode: SimulateMode,
    pub topology: Topology,
    #[serde(rename = "L")]
    pub side: usize,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<FrequencyModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<TimeGrid>,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub reshuffle: bool,
    #[serde(default = "default_four")]
    pub n_disorder: usize,
    #[serde(default = "default_twenty")]
    pub n_activation: usize,
    #[serde(default)]
    pub coupled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_target_stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_max_disorder: Option<usize>,
    /// Static mode: number of evenly spaced points on `[0, 1]`.
    #[serde(default = "default_p_points")]
    pub p_points: usize,
    /// Static mode: activation samples.
    #[serde(default = "default_static_samples")]
    pub n_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoColourMode {
    Sweep,
    Dynamic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoColourParams {
    pub mode: TwoColourMode,
    #[serde(rename = "L", default = "default_side")]
    pub side: usize,
    #[serde(default = "default_true")]
    pub constrained: bool,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default = "default_twenty")]
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<TimeGrid>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanfieldMode {
    Point,
    Grid,
    CriticalLine,
    Dynamic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanfieldParams {
    pub mode: MeanfieldMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi2: Option<f64>,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default = "default_line_points")]
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<TimeGrid>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationsParams {
    pub sigma: OneOrMany,
    pub lambda: OneOrMany,
    #[serde(default = "default_motif_samples")]
    pub n_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticKind {
    Gaussian,
    GaussianAsymptotic,
    Bernoulli,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticParams {
    pub kind: AnalyticKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<TimeGrid>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeDumpParams {
    pub topology: Topology,
    #[serde(rename = "L")]
    pub side: usize,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<FrequencyModel>,
}

#[derive(Debug, Clone)]
pub enum Params {
    Simulate(SimulateParams),
    TwoColour(TwoColourParams),
    Meanfield(MeanfieldParams),
    Correlations(CorrelationsParams),
    AnalyticP(AnalyticParams),
    LatticeDump(LatticeDumpParams),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub subcommand: String,
    pub master_seed: u64,
    pub output_dir: Option<String>,
    pub budget: u64,
    pub description: Option<String>,
    pub params: Params,
}

fn required_keys(subcommand: &str, raw: &Map<String, Value>) -> Vec<&'static str> {
    let mode = raw.get("mode").and_then(Value::as_str);
    let kind = raw.get("kind").and_then(Value::as_str);
    match subcommand {
        "simulate" if mode == Some("static") => vec!["topology", "L"],
        "simulate" => vec!["topology", "L", "model", "times"],
        "two-colour" if mode == Some("dynamic") => vec!["mode", "omega_ratio"],
        "two-colour" => vec!["mode"],
        "meanfield" => match mode {
            Some("point") => vec!["mode", "phi1", "phi2"],
            Some("dynamic") => vec!["mode", "omega_ratio"],
            _ => vec!["mode"],
        },
        "correlations" => vec!["sigma", "lambda"],
        "analytic-p" => match kind {
            Some("bernoulli") => vec!["kind", "eta", "omega1", "omega2"],
            Some("gaussian") | Some("gaussian_asymptotic") => vec!["kind", "omega", "sigma"],
            _ => vec!["kind"],
        },
        "lattice-dump" => vec!["topology", "L"],
        _ => vec![],
    }
}

fn typed<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::config(e.to_string()))
}

/// Validate and resolve a raw config object.
pub fn parse_config(raw: &Map<String, Value>) -> Result<ExperimentConfig, CliError> {
    let subcommand = match raw.get("subcommand") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(CliError::config("subcommand must be a string")),
        None => return Err(CliError::config("missing required key: subcommand")),
    };
    if !SUBCOMMANDS.contains(&subcommand.as_str()) {
        return Err(CliError::config(format!(
            "unknown subcommand {subcommand:?}; expected one of {}",
            SUBCOMMANDS.join(", ")
        )));
    }
    let missing: Vec<&str> =
        required_keys(&subcommand, raw).into_iter().filter(|k| !raw.contains_key(*k)).collect();
    if !missing.is_empty() {
        return Err(CliError::config(format!(
            "{subcommand}: missing required keys: {}",
            missing.join(", ")
        )));
    }

    let master_seed = match raw.get("master_seed") {
        None => 0,
        Some(v) => v.as_u64().ok_or_else(|| CliError::config("master_seed must be a nonnegative integer"))?,
    };
    let budget = match raw.get("budget") {
        None => DEFAULT_BUDGET as u64,
        Some(v) => v.as_u64().ok_or_else(|| CliError::config("budget must be a nonnegative integer"))?,
    };
    let string_key = |k: &str| -> Result<Option<String>, CliError> {
        match raw.get(k) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(CliError::config(format!("{k} must be a string"))),
        }
    };
    let output_dir = string_key("output_dir")?;
    let description = string_key("description")?;

    let rest: Map<String, Value> =
        raw.iter().filter(|(k, _)| !COMMON_KEYS.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect();
    let params = match subcommand.as_str() {
        "simulate" => Params::Simulate(typed(rest)?),
        "two-colour" => Params::TwoColour(typed(rest)?),
        "meanfield" => Params::Meanfield(typed(rest)?),
        "correlations" => Params::Correlations(typed(rest)?),
        "analytic-p" => Params::AnalyticP(typed(rest)?),
        _ => Params::LatticeDump(typed(rest)?),
    };
    let mut cfg = ExperimentConfig { subcommand, master_seed, output_dir, budget, description, params };
    cfg.materialize_defaults();
    Ok(cfg)
}

impl ExperimentConfig {
    fn materialize_defaults(&mut self) {
        match &mut self.params {
            Params::TwoColour(p) => {
                if p.mode == TwoColourMode::Dynamic && p.times.is_none() {
                    p.times = Some(TimeGrid::default());
                }
                if p.max_samples.is_none() {
                    p.max_samples = Some(p.n_samples);
                }
            }
            Params::Meanfield(p) => {
                if p.mode == MeanfieldMode::Dynamic && p.times.is_none() {
                    p.times = Some(TimeGrid::default());
                }
            }
            Params::AnalyticP(p) => {
                if p.times.is_none() {
                    p.times = Some(TimeGrid::default());
                }
            }
            _ => {}
        }
    }

    /// The fully resolved config as a flat JSON object.
    pub fn to_json(&self) -> Value {
        let params = match &self.params {
            Params::Simulate(p) => serde_json::to_value(p),
            Params::TwoColour(p) => serde_json::to_value(p),
            Params::Meanfield(p) => serde_json::to_value(p),
            Params::Correlations(p) => serde_json::to_value(p),
            Params::AnalyticP(p) => serde_json::to_value(p),
            Params::LatticeDump(p) => serde_json::to_value(p),
        }
        .expect("params serialize");
        let mut map = Map::new();
        map.insert("subcommand".into(), Value::from(self.subcommand.clone()));
        map.insert("master_seed".into(), Value::from(self.master_seed));
        map.insert("budget".into(), Value::from(self.budget));
        if let Some(d) = &self.output_dir {
            map.insert("output_dir".into(), Value::from(d.clone()));
        }
        if let Some(d) = &self.description {
            map.insert("description".into(), Value::from(d.clone()));
        }
        if let Value::Object(p) = params {
            map.extend(p);
        }
        Value::Object(map)
    }
}

/// Parse a `key=value` override; the value is read as JSON and falls back
/// to a plain string.
pub fn parse_override(s: &str) -> Result<(String, Value), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override {s:?} is not of the form key=value")))?;
    if k.is_empty() {
        return Err(CliError::config(format!("override {s:?} has an empty key")));
    }
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn obj(v: Value) -> Map<String, Value> {
        match v {
            Value::Object(m) => m,
            _ => panic!("not an object"),
        }
    }

    #[test]
    fn empty_simulate_lists_required_keys() {
        let err = parse_config(&obj(json!({"subcommand": "simulate"}))).unwrap_err();
        for key in ["topology", "L", "model", "times"] {
            assert!(err.message.contains(key), "{}", err.message);
        }
    }

    #[test]
    fn bernoulli_analytic_config_is_valid() {
        let raw = json!({"subcommand":"analytic-p","kind":"bernoulli","eta":0.5,"omega1":1,"omega2":2});
        let cfg = parse_config(&obj(raw)).unwrap();
        let Params::AnalyticP(p) = &cfg.params else { panic!("wrong params") };
        assert_eq!(p.times, Some(TimeGrid::default()));
        assert_eq!(cfg.to_json()["k_max"], 100);
    }

    #[test]
    fn unknown_and_mistyped_keys_are_rejected() {
        let bad = [
            json!({"subcommand":"meanfield","mode":"grid","colour":1}),
            json!({"subcommand":"meanfield","mode":"grid","grid_step":"fine"}),
            json!({"subcommand":"simulate","topology":"square","L":8,"times":[0.0],
                   "model":{"kind":"uniform","omega":1,"extra":2}}),
            json!({"subcommand":"nothing"}),
            json!({"subcommand":"meanfield","mode":"grid","master_seed":-1}),
        ];
        for raw in bad {
            let e = parse_config(&obj(raw.clone())).unwrap_err();
            assert_eq!(e.kind, crate::ErrorKind::Config, "{raw}");
        }
    }

    #[test]
    fn resolved_config_round_trips() {
        let raw = json!({"subcommand":"simulate","topology":"square","L":16,
                         "model":{"kind":"gaussian_iid","mean":1.0,"std":0.2},
                         "times":{"start":0,"stop":1,"points":3},"master_seed":42});
        let cfg = parse_config(&obj(raw)).unwrap();
        let echo = cfg.to_json();
        assert_eq!(echo["master_seed"], 42);
        assert_eq!(echo["n_disorder"], 4);
        let again = parse_config(&obj(echo.clone())).unwrap();
        assert_eq!(again.to_json(), echo);
    }

    #[test]
    fn time_range_includes_both_ends() {
        let v = TimeGrid::Range(TimeRange { start: 0.0, stop: 1.0, points: 5 }).values().unwrap();
        assert_eq!(v, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(TimeGrid::Range(TimeRange { start: 1.0, stop: 0.0, points: 5 }).values().is_err());
    }

    #[test]
    fn overrides_parse_json_or_string() {
        assert_eq!(parse_override("L=64").unwrap(), ("L".to_string(), json!(64)));
        assert_eq!(parse_override("topology=square").unwrap(), ("topology".to_string(), json!("square")));
        assert!(parse_override("novalue").is_err());
    }
}
