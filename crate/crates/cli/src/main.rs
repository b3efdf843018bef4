//! `dynperc`: run percolation experiments from JSON configs and write CSVs
//! with a checksummed manifest.

mod config;
mod output;
mod presets;
mod run;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use crate::config::{parse_config, parse_override, ExperimentConfig};
use crate::output::RunManifest;

pub const DEFAULT_OUTPUT_DIR: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Budget,
    NonConvergence,
    Io,
    Verify,
}

impl ErrorKind {
    fn name(self) -> &'static str {
        match self {
            ErrorKind::Config => "config",
            ErrorKind::Budget => "budget",
            ErrorKind::NonConvergence => "non_convergence",
            ErrorKind::Io => "io",
            ErrorKind::Verify => "verify",
        }
    }

    fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Budget => 3,
            ErrorKind::NonConvergence => 4,
            ErrorKind::Io | ErrorKind::Verify => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Config, message: msg.into() }
    }

    pub fn io(e: impl fmt::Display) -> Self {
        CliError { kind: ErrorKind::Io, message: e.to_string() }
    }

    /// The single-line JSON form printed on stderr.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({"error": self.kind.name(), "message": self.message}).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.name(), self.message)
    }
}

impl From<dynperc::Error> for CliError {
    fn from(e: dynperc::Error) -> Self {
        let kind = match e {
            dynperc::Error::Config(_) | dynperc::Error::Domain(_) => ErrorKind::Config,
            dynperc::Error::Budget { .. } => ErrorKind::Budget,
            dynperc::Error::NonConvergence(_) => ErrorKind::NonConvergence,
        };
        CliError { kind, message: e.to_string() }
    }
}

#[derive(Parser, Debug)]
#[command(name = "dynperc", version, about = "Dynamical entanglement percolation experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    master_seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Maximum node evaluations; overrides the config file.
    #[arg(long, global = true)]
    budget: Option<u64>,
}

#[derive(Args, Debug, Clone)]
struct Direct {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Config override `key=value`; the value is parsed as JSON when possible.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Giant-component trajectory or static percolation curve.
    Simulate(Direct),
    /// Two-colour bond percolation: phase diagram or dynamical curve.
    #[command(name = "two-colour")]
    TwoColour(Direct),
    /// Mean-field solution of the two-colour model.
    Meanfield(Direct),
    /// Motif correlation statistics of long edges.
    Correlations(Direct),
    /// Analytic ensemble-averaged activation probability.
    #[command(name = "analytic-p")]
    AnalyticP(Direct),
    /// Node positions, edges and frequencies of one lattice.
    #[command(name = "lattice-dump")]
    LatticeDump(Direct),
    /// Run a config file, or the config echoed in a manifest.
    Run { config: PathBuf },
    /// Run a named preset into `<output_dir>/<name>/<label>/`.
    Preset {
        name: String,
        /// Full scale instead of desk scale.
        #[arg(long)]
        full: bool,
    },
    /// Check every manifest below a directory against its outputs.
    Verify { dir: PathBuf },
}

fn read_object(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::config(format!("{}: config must be a JSON object", path.display()))),
        Err(e) => Err(CliError::config(format!("{}: {e}", path.display()))),
    }
}

/// A manifest stores the resolved config under `config`; a plain config is
/// used as is.
fn unwrap_manifest(raw: Map<String, Value>) -> Map<String, Value> {
    match (raw.get("config"), raw.contains_key("outputs")) {
        (Some(Value::Object(c)), true) => c.clone(),
        _ => raw,
    }
}

fn direct_config(subcommand: &str, d: &Direct) -> Result<Map<String, Value>, CliError> {
    let mut raw = match &d.config {
        Some(path) => read_object(path)?,
        None => Map::new(),
    };
    match raw.get("subcommand") {
        None => {
            raw.insert("subcommand".into(), Value::from(subcommand));
        }
        Some(Value::String(s)) if s == subcommand => {}
        Some(other) => {
            return Err(CliError::config(format!("config subcommand {other} does not match `{subcommand}`")));
        }
    }
    for o in &d.overrides {
        let (k, v) = parse_override(o)?;
        if k == "subcommand" {
            return Err(CliError::config("subcommand cannot be overridden"));
        }
        raw.insert(k, v);
    }
    Ok(raw)
}

fn apply_global(raw: &mut Map<String, Value>, g: &Global) {
    if let Some(seed) = g.master_seed {
        raw.insert("master_seed".into(), Value::from(seed));
    }
    if let Some(budget) = g.budget {
        raw.insert("budget".into(), Value::from(budget));
    }
}

fn output_root(cfg_dir: Option<&str>, g: &Global) -> PathBuf {
    if let Some(d) = &g.output_dir {
        return d.clone();
    }
    if let Some(d) = cfg_dir {
        return PathBuf::from(d);
    }
    match std::env::var_os("DYNPERC_OUTPUT_DIR") {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from(DEFAULT_OUTPUT_DIR),
    }
}

fn execute_into(cfg: &ExperimentConfig, dir: &Path) -> Result<(), CliError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let tables = run::execute(cfg)?;
    let mut manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.to_json(),
        started_unix: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        outputs: Vec::new(),
    };
    output::write_run(dir, &tables, &mut manifest)?;
    for o in &manifest.outputs {
        println!("{}", dir.join(&o.file).display());
    }
    Ok(())
}

fn run_raw(mut raw: Map<String, Value>, g: &Global) -> Result<(), CliError> {
    apply_global(&mut raw, g);
    let cfg = parse_config(&raw)?;
    let dir = output_root(cfg.output_dir.as_deref(), g);
    execute_into(&cfg, &dir)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(CliError::io)?;
    }
    let direct = |name: &str, d: &Direct| direct_config(name, d).and_then(|raw| run_raw(raw, g));
    match &cli.command {
        Command::Simulate(d) => direct("simulate", d),
        Command::TwoColour(d) => direct("two-colour", d),
        Command::Meanfield(d) => direct("meanfield", d),
        Command::Correlations(d) => direct("correlations", d),
        Command::AnalyticP(d) => direct("analytic-p", d),
        Command::LatticeDump(d) => direct("lattice-dump", d),
        Command::Run { config } => run_raw(unwrap_manifest(read_object(config)?), g),
        Command::Preset { name, full } => {
            let runs = presets::preset(name, *full)?;
            let root = output_root(None, g).join(name);
            // Validate everything before running anything.
            let mut parsed = Vec::with_capacity(runs.len());
            for r in runs {
                let mut raw = r.config;
                apply_global(&mut raw, g);
                parsed.push((r.label, parse_config(&raw)?));
            }
            for (label, cfg) in &parsed {
                execute_into(cfg, &root.join(label))?;
            }
            Ok(())
        }
        Command::Verify { dir } => {
            let (n, bad) = output::verify_dir(dir)?;
            if n == 0 {
                return Err(CliError { kind: ErrorKind::Verify, message: format!("no manifests under {}", dir.display()) });
            }
            if !bad.is_empty() {
                let list: Vec<String> =
                    bad.iter().map(|m| format!("{}: {} ({})", m.manifest.display(), m.file, m.reason)).collect();
                return Err(CliError { kind: ErrorKind::Verify, message: list.join("; ") });
            }
            println!("{n} manifests verified");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let err = CliError::config(e.to_string().lines().next().unwrap_or("invalid arguments").to_string());
                eprintln!("{}", err.to_json_line());
                return ExitCode::from(2);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.kind.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_line_is_single_json_object() {
        let e = CliError::config("bad\nkey");
        let line = e.to_json_line();
        assert!(!line.contains('\n'));
        let v: Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["error"], "config");
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        let code = |e: dynperc::Error| CliError::from(e).kind.exit_code();
        assert_eq!(code(dynperc::Error::Config("x".into())), 2);
        assert_eq!(code(dynperc::Error::Domain("x".into())), 2);
        assert_eq!(code(dynperc::Error::Budget { required: 2, budget: 1 }), 3);
        assert_eq!(code(dynperc::Error::NonConvergence("x".into())), 4);
    }

    #[test]
    fn mismatched_subcommand_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"subcommand":"meanfield","mode":"grid"}"#).unwrap();
        let d = Direct { config: Some(path), overrides: vec![] };
        assert!(direct_config("simulate", &d).is_err());
        assert!(direct_config("meanfield", &d).is_ok());
    }

    #[test]
    fn overrides_beat_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"mode":"point","phi1":0.1,"phi2":0.2}"#).unwrap();
        let d = Direct { config: Some(path), overrides: vec!["phi1=0.9".into()] };
        let raw = direct_config("meanfield", &d).unwrap();
        assert_eq!(raw["phi1"], 0.9);
    }

    #[test]
    fn manifest_config_is_unwrapped() {
        let mut m = Map::new();
        m.insert("config".into(), serde_json::json!({"subcommand": "meanfield"}));
        m.insert("outputs".into(), Value::Array(vec![]));
        assert_eq!(unwrap_manifest(m)["subcommand"], "meanfield");
    }
}
