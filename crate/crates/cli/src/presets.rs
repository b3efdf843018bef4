//! Named bundles of configs that regenerate each figure's data.

use std::f64::consts::PI;

use serde_json::{json, Map, Value};

use crate::CliError;

pub const NAMES: [&str; 7] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"];

/// One config of a preset, written to `<output_dir>/<preset>/<label>/`.
pub struct PresetRun {
    pub label: String,
    pub config: Map<String, Value>,
}

struct Scale {
    side: usize,
    n_disorder: usize,
    n_activation: usize,
    motif_samples: usize,
    static_samples: usize,
    two_colour_samples: usize,
}

const DESK: Scale =
    Scale { side: 256, n_disorder: 4, n_activation: 20, motif_samples: 100_000, static_samples: 200, two_colour_samples: 20 };
const FULL: Scale = Scale {
    side: 1000,
    n_disorder: 10,
    n_activation: 100,
    motif_samples: 1_000_000,
    static_samples: 1000,
    two_colour_samples: 100,
};

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("preset configs are objects"),
    }
}

fn run(label: impl Into<String>, v: Value) -> PresetRun {
    PresetRun { label: label.into(), config: object(v) }
}

fn trajectory(s: &Scale, description: String, model: Value, sigma: f64, reshuffle: bool) -> Value {
    json!({
        "subcommand": "simulate",
        "description": description,
        "mode": "trajectory",
        "topology": "square",
        "L": s.side,
        "model": model,
        "times": {"start": 0.0, "stop": 30.0, "points": 600},
        "sigma": sigma,
        "reshuffle": reshuffle,
        "n_disorder": s.n_disorder,
        "n_activation": s.n_activation,
    })
}

fn label(x: f64) -> String {
    format!("{x}").replace('.', "p")
}

fn fig2(s: &Scale) -> Vec<PresetRun> {
    let mut runs = Vec::new();
    for std in [0.0, 0.1, 0.2, 0.3] {
        let model = if std == 0.0 {
            json!({"kind": "uniform", "omega": 1.0})
        } else {
            json!({"kind": "gaussian_iid", "mean": 1.0, "std": std})
        };
        let d = format!("Giant component on the square lattice, i.i.d. Gaussian frequencies with mean 1 and std {std}");
        runs.push(run(format!("gaussian_std_{}", label(std)), trajectory(s, d, model, 0.0, false)));
    }
    runs.push(run(
        "static",
        json!({
            "subcommand": "simulate",
            "description": "Static bond percolation curve on the square lattice",
            "mode": "static",
            "topology": "square",
            "L": s.side,
            "n_samples": s.static_samples,
        }),
    ));
    runs
}

fn correlated_pair(runs: &mut Vec<PresetRun>, s: &Scale, name: &str, what: &str, model: Value, sigma: f64) {
    for reshuffle in [false, true] {
        let tag = if reshuffle { "reshuffled" } else { "correlated" };
        let d = format!("Giant component with {what}, disorder sigma {sigma}, {tag} frequencies");
        runs.push(run(format!("{name}_sigma_{}_{tag}", label(sigma)), trajectory(s, d, model.clone(), sigma, reshuffle)));
    }
}

fn fig3(s: &Scale) -> Vec<PresetRun> {
    let mut runs = Vec::new();
    for sigma in [0.1, 0.2] {
        let model = json!({"kind": "exponential_distance", "omega": 2.0, "lambda": 2.0});
        correlated_pair(&mut runs, s, "exponential", "exponential distance-dependent frequencies", model, sigma);
    }
    runs
}

fn fig4(s: &Scale) -> Vec<PresetRun> {
    let mut runs = Vec::new();
    for (sigma, ratio) in [(0.1, 2.0), (0.2, 2.5)] {
        let model = json!({"kind": "threshold_distance", "omega1": 1.0, "omega2": ratio, "lambda": 1.0});
        let what = format!("two-valued threshold frequencies of ratio {ratio}");
        correlated_pair(&mut runs, s, "threshold", &what, model, sigma);
    }
    runs
}

fn fig5(s: &Scale) -> Vec<PresetRun> {
    let mut runs = Vec::new();
    for constrained in [true, false] {
        let tag = if constrained { "constrained" } else { "reshuffled" };
        runs.push(run(
            format!("sweep_{tag}"),
            json!({
                "subcommand": "two-colour",
                "description": format!("Two-colour phase diagram S(phi1, phi2), {tag} colouring"),
                "mode": "sweep",
                "L": s.side,
                "constrained": constrained,
                "grid_step": 0.02,
                "n_samples": s.two_colour_samples,
            }),
        ));
    }
    for ratio in [2.0, 2.5] {
        for constrained in [true, false] {
            let tag = if constrained { "constrained" } else { "reshuffled" };
            runs.push(run(
                format!("dynamic_ratio_{}_{tag}", label(ratio)),
                json!({
                    "subcommand": "two-colour",
                    "description": format!("Two-colour giant component along the dynamical curve, frequency ratio {ratio}, {tag} colouring"),
                    "mode": "dynamic",
                    "L": s.side,
                    "constrained": constrained,
                    "omega_ratio": ratio,
                    "n_samples": s.two_colour_samples,
                }),
            ));
        }
        runs.push(run(
            format!("meanfield_dynamic_ratio_{}", label(ratio)),
            json!({
                "subcommand": "meanfield",
                "description": format!("Mean-field giant component along the dynamical curve, frequency ratio {ratio}"),
                "mode": "dynamic",
                "omega_ratio": ratio,
            }),
        ));
    }
    runs.push(run(
        "meanfield_grid",
        json!({
            "subcommand": "meanfield",
            "description": "Mean-field phase diagram S(phi1, phi2)",
            "mode": "grid",
            "grid_step": 0.02,
        }),
    ));
    runs.push(run(
        "meanfield_critical_line",
        json!({
            "subcommand": "meanfield",
            "description": "Mean-field critical line",
            "mode": "critical-line",
        }),
    ));
    runs
}

fn fig6(s: &Scale) -> Vec<PresetRun> {
    let sigmas: Vec<f64> = (1..=10).map(|i| 0.05 * i as f64).collect();
    let lambdas: Vec<f64> = (0..=10).map(|i| 0.5 + 0.1 * i as f64).collect();
    vec![run(
        "correlations",
        json!({
            "subcommand": "correlations",
            "description": "Pearson correlation of adjacent long edges in the four-node motif",
            "sigma": sigmas,
            "lambda": lambdas,
            "n_samples": s.motif_samples,
        }),
    )]
}

fn fig7() -> Vec<PresetRun> {
    let mut runs = Vec::new();
    for sigma in [0.1, 0.2, 0.3] {
        for kind in ["gaussian", "gaussian_asymptotic"] {
            runs.push(run(
                format!("{kind}_sigma_{}", label(sigma)),
                json!({
                    "subcommand": "analytic-p",
                    "description": format!("Ensemble activation probability for Gaussian frequencies with std {sigma} ({kind})"),
                    "kind": kind,
                    "omega": 1.0,
                    "sigma": sigma,
                    "times": {"start": 0.0, "stop": 30.0, "points": 600},
                }),
            ));
        }
    }
    runs
}

fn fig8(s: &Scale) -> Vec<PresetRun> {
    let mut runs = Vec::new();
    let cases = [(0.25, 2.0, "2"), (0.5, 2.0, "2"), (0.5, 2.5, "2p5"), (0.5, PI, "pi")];
    for (eta, ratio, ratio_label) in cases {
        let name = format!("eta_{}_ratio_{ratio_label}", label(eta));
        let times = json!({"start": 0.0, "stop": 4.0 * PI, "points": 300});
        runs.push(run(
            format!("{name}_analytic"),
            json!({
                "subcommand": "analytic-p",
                "description": format!("Activation probability for two frequencies, weight {eta} and ratio {ratio}"),
                "kind": "bernoulli",
                "eta": eta,
                "omega1": 1.0,
                "omega2": ratio,
                "times": times,
            }),
        ));
        let model = json!({"kind": "bernoulli_iid", "eta": eta, "omega1": 1.0, "omega2": ratio});
        let mut sim = trajectory(
            s,
            format!("Giant component with i.i.d. two-valued frequencies, weight {eta} and ratio {ratio}"),
            model,
            0.0,
            false,
        );
        sim["times"] = times;
        runs.push(run(format!("{name}_simulated"), sim));
    }
    runs
}

pub fn preset(name: &str, full: bool) -> Result<Vec<PresetRun>, CliError> {
    let s = if full { &FULL } else { &DESK };
    Ok(match name {
        "fig2" => fig2(s),
        "fig3" => fig3(s),
        "fig4" => fig4(s),
        "fig5" => fig5(s),
        "fig6" => fig6(s),
        "fig7" => fig7(),
        "fig8" => fig8(s),
        _ => {
            return Err(CliError::config(format!("unknown preset {name:?}; expected one of {}", NAMES.join(", "))))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn every_preset_parses() {
        for name in NAMES {
            for full in [false, true] {
                let runs = preset(name, full).unwrap();
                assert!(!runs.is_empty());
                let mut labels: Vec<&str> = runs.iter().map(|r| r.label.as_str()).collect();
                labels.sort();
                labels.dedup();
                assert_eq!(labels.len(), runs.len(), "{name}: duplicate labels");
                for r in &runs {
                    let cfg = parse_config(&r.config).unwrap_or_else(|e| panic!("{name}/{}: {e}", r.label));
                    assert!(cfg.description.is_some());
                }
            }
        }
    }

    #[test]
    fn unknown_preset_is_config_error() {
        assert!(preset("fig9", false).is_err());
    }
}
