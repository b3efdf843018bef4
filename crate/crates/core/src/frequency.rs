//! Edge frequency assignment: i.i.d. models, distance-based models on a
//! perturbed lattice, a node-weight extension point, and the reshuffling
//! control.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::lattice::PerturbedLattice;
use crate::rng::{self, purpose};
use crate::stats::Histogram;

/// Symmetric edge-frequency function of the two endpoint weights.
pub type NodeWeightFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct NodeWeightModel {
    /// One weight per lattice node.
    pub weights: Vec<f64>,
    pub f: NodeWeightFn,
}

impl fmt::Debug for NodeWeightModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NodeWeightModel")
            .field("weights", &format_args!("[{} values]", self.weights.len()))
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrequencyModel {
    /// Every edge oscillates at `omega`.
    Uniform { omega: f64 },
    /// Independent `N(mean, std²)` draws. Negative draws are kept: only
    /// `|cos ωt|` enters the dynamics.
    GaussianIid { mean: f64, std: f64 },
    /// Independent two-point draws: `omega1` with probability `eta`, else
    /// `omega2`.
    BernoulliIid { eta: f64, omega1: f64, omega2: f64 },
    /// `ω = Ω·exp(−d/λ)`.
    ExponentialDistance { omega: f64, lambda: f64 },
    /// `ω = Ω₁` if `d < λ`, else `Ω₂` (ties go to `Ω₂`).
    ThresholdDistance { omega1: f64, omega2: f64, lambda: f64 },
    /// `ω = f(g_a, g_b)` for node weights `g`.
    #[serde(skip)]
    NodeWeight(NodeWeightModel),
}

impl FrequencyModel {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                config(format!("{name} must be a positive number, got {v}"))
            }
        };
        match self {
            FrequencyModel::Uniform { omega } => positive("omega", *omega),
            FrequencyModel::GaussianIid { mean, std } => {
                if !mean.is_finite() {
                    return config("gaussian mean must be finite");
                }
                if !(*std >= 0.0) || !std.is_finite() {
                    return config(format!("gaussian std must be nonnegative, got {std}"));
                }
                Ok(())
            }
            FrequencyModel::BernoulliIid { eta, omega1, omega2 } => {
                if !(0.0..=1.0).contains(eta) {
                    return config(format!("eta must lie in [0, 1], got {eta}"));
                }
                positive("omega1", *omega1)?;
                positive("omega2", *omega2)
            }
            FrequencyModel::ExponentialDistance { omega, lambda } => {
                positive("omega", *omega)?;
                positive("lambda", *lambda)
            }
            FrequencyModel::ThresholdDistance { omega1, omega2, lambda } => {
                positive("omega1", *omega1)?;
                positive("omega2", *omega2)?;
                positive("lambda", *lambda)?;
                if omega1 == omega2 {
                    return config("threshold model needs omega1 != omega2");
                }
                Ok(())
            }
            FrequencyModel::NodeWeight(m) => {
                if m.weights.iter().any(|w| !w.is_finite()) {
                    return config("node weights must be finite");
                }
                Ok(())
            }
        }
    }

    /// Short label used in manifests and CSV metadata.
    pub fn kind_name(&self) -> &'static str {
        match self {
            FrequencyModel::Uniform { .. } => "uniform",
            FrequencyModel::GaussianIid { .. } => "gaussian_iid",
            FrequencyModel::BernoulliIid { .. } => "bernoulli_iid",
            FrequencyModel::ExponentialDistance { .. } => "exponential_distance",
            FrequencyModel::ThresholdDistance { .. } => "threshold_distance",
            FrequencyModel::NodeWeight(_) => "custom_node_weight",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FrequencyAssignment {
    pub omegas: Vec<f64>,
    pub model: FrequencyModel,
    pub seed: u64,
}

/// Assign one angular frequency per edge. Random models draw from the
/// `(seed, FREQUENCIES)` stream in edge order.
pub fn assign(
    lattice: &PerturbedLattice,
    model: &FrequencyModel,
    seed: u64,
) -> Result<FrequencyAssignment> {
    model.validate()?;
    let e = lattice.edge_count();
    let omegas = match model {
        FrequencyModel::Uniform { omega } => vec![*omega; e],
        FrequencyModel::GaussianIid { mean, std } => {
            let mut rng = rng::stream(seed, &[purpose::FREQUENCIES]);
            (0..e)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mean + std * z
                })
                .collect()
        }
        FrequencyModel::BernoulliIid { eta, omega1, omega2 } => {
            let mut rng = rng::stream(seed, &[purpose::FREQUENCIES]);
            (0..e)
                .map(|_| if rng::unit(&mut rng) < *eta { *omega1 } else { *omega2 })
                .collect()
        }
        FrequencyModel::ExponentialDistance { omega, lambda } => {
            lattice.lengths.iter().map(|d| omega * (-d / lambda).exp()).collect()
        }
        FrequencyModel::ThresholdDistance { omega1, omega2, lambda } => lattice
            .lengths
            .iter()
            .map(|&d| if d < *lambda { *omega1 } else { *omega2 })
            .collect(),
        FrequencyModel::NodeWeight(m) => {
            if m.weights.len() != lattice.node_count() {
                return config(format!(
                    "node-weight model has {} weights for {} nodes",
                    m.weights.len(),
                    lattice.node_count()
                ));
            }
            let mut out = Vec::with_capacity(e);
            for &(a, b) in &lattice.edges {
                let (ga, gb) = (m.weights[a as usize], m.weights[b as usize]);
                let (w, w_swapped) = ((m.f)(ga, gb), (m.f)(gb, ga));
                if (w - w_swapped).abs() > 1e-12 * w.abs().max(1.0) {
                    return config("node-weight function must be symmetric in its arguments");
                }
                if !w.is_finite() {
                    return config("node-weight function returned a non-finite frequency");
                }
                out.push(w);
            }
            out
        }
    };
    Ok(FrequencyAssignment { omegas, model: model.clone(), seed })
}

/// Uniformly random permutation of the frequencies over the edges
/// (Fisher–Yates on the `(seed, RESHUFFLE)` stream).
pub fn reshuffle(assignment: &FrequencyAssignment, seed: u64) -> FrequencyAssignment {
    let mut omegas = assignment.omegas.clone();
    let mut rng = rng::stream(seed, &[purpose::RESHUFFLE]);
    omegas.shuffle(&mut rng);
    FrequencyAssignment { omegas, model: assignment.model.clone(), seed }
}

/// Histogram of the assigned frequencies. Two-valued assignments use two
/// bins so that each value gets its own.
pub fn frequency_histogram(assignment: &FrequencyAssignment, bins: usize) -> Histogram {
    Histogram::from_values(&assignment.omegas, bins)
}

impl FrequencyAssignment {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// The distinct values if the assignment takes exactly two, ascending.
    pub fn two_values(&self) -> Option<(f64, f64)> {
        let first = *self.omegas.first()?;
        let mut second = None;
        for &w in &self.omegas {
            if w != first {
                match second {
                    None => second = Some(w),
                    Some(s) if s != w => return None,
                    _ => {}
                }
            }
        }
        let second = second?;
        Some((first.min(second), first.max(second)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{generate_lattice, perturb, LatticeSpec};

    fn lattice(l: usize, sigma: f64, seed: u64) -> PerturbedLattice {
        let base = generate_lattice(LatticeSpec::square(l).unwrap()).unwrap();
        perturb(&base, sigma, seed).unwrap()
    }

    #[test]
    fn uniform_constant() {
        let lat = lattice(8, 0.1, 1);
        let a = assign(&lat, &FrequencyModel::Uniform { omega: 1.0 }, 0).unwrap();
        assert!(a.omegas.iter().all(|&w| w == 1.0));
        assert_eq!(frequency_histogram(&a, 10).occupied_bins(), 1);
    }

    #[test]
    fn exponential_matches_formula() {
        let lat = lattice(8, 0.2, 3);
        let model = FrequencyModel::ExponentialDistance { omega: 2.0, lambda: 2.0 };
        let a = assign(&lat, &model, 0).unwrap();
        for (w, d) in a.omegas.iter().zip(&lat.lengths) {
            assert_eq!(*w, 2.0 * (-d / 2.0).exp());
        }
        // Length-2 edge gives 2/e.
        let mut two = lat.clone();
        two.lengths[0] = 2.0;
        let a = assign(&two, &model, 0).unwrap();
        assert!((a.omegas[0] - 0.735_758_882_342_885).abs() < 1e-12);
    }

    #[test]
    fn threshold_assignment_and_tie() {
        let mut lat = lattice(8, 0.1, 5);
        lat.lengths[3] = 1.0;
        let model = FrequencyModel::ThresholdDistance { omega1: 1.0, omega2: 2.0, lambda: 1.0 };
        let a = assign(&lat, &model, 0).unwrap();
        for (w, &d) in a.omegas.iter().zip(&lat.lengths) {
            assert_eq!(*w, if d < 1.0 { 1.0 } else { 2.0 });
        }
        assert_eq!(a.omegas[3], 2.0);
    }

    #[test]
    fn invalid_parameters() {
        let lat = lattice(4, 0.0, 0);
        let bad = [
            FrequencyModel::ExponentialDistance { omega: 1.0, lambda: 0.0 },
            FrequencyModel::ThresholdDistance { omega1: 1.0, omega2: 2.0, lambda: -1.0 },
            FrequencyModel::ThresholdDistance { omega1: 1.0, omega2: 1.0, lambda: 1.0 },
            FrequencyModel::Uniform { omega: 0.0 },
            FrequencyModel::GaussianIid { mean: 1.0, std: -0.1 },
            FrequencyModel::BernoulliIid { eta: 1.5, omega1: 1.0, omega2: 2.0 },
        ];
        for m in bad {
            assert!(matches!(assign(&lat, &m, 0), Err(crate::Error::Config(_))), "{m:?}");
        }
    }

    #[test]
    fn gaussian_keeps_negative_draws() {
        let lat = lattice(32, 0.0, 0);
        let model = FrequencyModel::GaussianIid { mean: 0.0, std: 1.0 };
        let a = assign(&lat, &model, 9).unwrap();
        assert!(a.omegas.iter().any(|&w| w < 0.0));
        let b = assign(&lat, &model, 9).unwrap();
        assert_eq!(a.omegas, b.omegas);
    }

    #[test]
    fn reshuffle_constant_is_identity() {
        let lat = lattice(8, 0.0, 0);
        let a = assign(&lat, &FrequencyModel::Uniform { omega: 3.0 }, 0).unwrap();
        assert_eq!(reshuffle(&a, 1).omegas, a.omegas);
    }

    #[test]
    fn reshuffle_preserves_threshold_counts() {
        let lat = lattice(32, 0.1, 2);
        let model = FrequencyModel::ThresholdDistance { omega1: 1.0, omega2: 2.0, lambda: 1.0 };
        let a = assign(&lat, &model, 0).unwrap();
        let r = reshuffle(&a, 17);
        let count = |v: &[f64]| v.iter().filter(|&&w| w == 2.0).count();
        assert_eq!(count(&a.omegas), count(&r.omegas));
        assert_ne!(a.omegas, r.omegas);
        assert_eq!(a.two_values(), Some((1.0, 2.0)));
    }

    #[test]
    fn node_weight_extension() {
        let lat = lattice(6, 0.0, 0);
        let weights: Vec<f64> = (0..lat.node_count()).map(|v| v as f64).collect();
        let sym = FrequencyModel::NodeWeight(NodeWeightModel {
            weights: weights.clone(),
            f: Arc::new(|a, b| 1.0 + (a - b).abs()),
        });
        let a = assign(&lat, &sym, 0).unwrap();
        let (u, v) = lat.edges[0];
        assert_eq!(a.omegas[0], 1.0 + (u as f64 - v as f64).abs());

        let asym = FrequencyModel::NodeWeight(NodeWeightModel {
            weights,
            f: Arc::new(|a, b| a - 2.0 * b),
        });
        assert!(assign(&lat, &asym, 0).is_err());
        let short = FrequencyModel::NodeWeight(NodeWeightModel {
            weights: vec![1.0; 3],
            f: Arc::new(|a, b| a + b),
        });
        assert!(assign(&lat, &short, 0).is_err());
    }

    #[test]
    fn two_values_detection() {
        let mk = |v: Vec<f64>| FrequencyAssignment {
            omegas: v,
            model: FrequencyModel::Uniform { omega: 1.0 },
            seed: 0,
        };
        assert_eq!(mk(vec![2.0, 1.0, 2.0]).two_values(), Some((1.0, 2.0)));
        assert_eq!(mk(vec![1.0, 1.0]).two_values(), None);
        assert_eq!(mk(vec![1.0, 2.0, 3.0]).two_values(), None);
    }
}
