//! Edge activation sampling and largest-component measurement.
//!
//! Each activation draws one uniform per edge in edge order from its own
//! stream and activates the edge when the draw is below the edge's
//! conversion probability. Trajectory tasks are keyed by
//! `(disorder, time, activation)` and their results are reduced in index
//! order, so records are bitwise identical for any thread count.

use bitvec::prelude::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::conversion_probability;
use crate::error::{config, Error, Result};
use crate::frequency::{self, FrequencyAssignment, FrequencyModel};
use crate::lattice::{self, LatticeSpec, PerturbedLattice};
use crate::rng::{self, purpose, StreamRng};
use crate::stats::RunningStats;
use crate::union_find::UnionFind;

/// Ratio of the order-parameter and correlation-length exponents for 2D
/// percolation, `β/ν = 5/48`.
pub const BETA_OVER_NU_2D: f64 = 5.0 / 48.0;

/// Default cap on node-evaluations (nodes × samples × time points).
pub const DEFAULT_BUDGET: u128 = 2_000_000_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSample {
    pub active: BitVec,
    pub time: f64,
    pub seed: u64,
}

impl ActivationSample {
    pub fn active_count(&self) -> usize {
        self.active.count_ones()
    }

    pub fn active_fraction(&self) -> f64 {
        if self.active.is_empty() {
            0.0
        } else {
            self.active_count() as f64 / self.active.len() as f64
        }
    }
}

/// Activate each edge with probability `phi(e)`, merging active edges into
/// `uf` (reset first). Returns the number of active edges.
#[inline]
pub(crate) fn activate_into<F: Fn(usize) -> f64>(
    edges: &[(u32, u32)],
    phi: F,
    rng: &mut StreamRng,
    uf: &mut UnionFind,
) -> usize {
    uf.reset();
    let mut active = 0;
    for (e, &(a, b)) in edges.iter().enumerate() {
        if rng::unit(rng) < phi(e) {
            active += 1;
            uf.union(a, b);
        }
    }
    active
}

/// Draw one activation of every edge at time `t` from the
/// `(seed, ACTIVATION)` stream.
pub fn sample_activation(
    lattice: &PerturbedLattice,
    assignment: &FrequencyAssignment,
    t: f64,
    seed: u64,
) -> Result<ActivationSample> {
    check_assignment(lattice, assignment)?;
    let mut rng = rng::stream(seed, &[purpose::ACTIVATION]);
    let active = assignment
        .omegas
        .iter()
        .map(|&w| rng::unit(&mut rng) < conversion_probability(w, t))
        .collect();
    Ok(ActivationSample { active, time: t, seed })
}

fn check_assignment(lattice: &PerturbedLattice, assignment: &FrequencyAssignment) -> Result<()> {
    if assignment.len() != lattice.edge_count() {
        return config(format!(
            "assignment has {} frequencies for {} edges",
            assignment.len(),
            lattice.edge_count()
        ));
    }
    Ok(())
}

/// Size of the largest cluster of nodes joined by active edges, divided by
/// the node count.
pub fn largest_component_fraction(lattice: &PerturbedLattice, sample: &ActivationSample) -> Result<f64> {
    if sample.active.len() != lattice.edge_count() {
        return config(format!(
            "sample has {} edges, lattice has {}",
            sample.active.len(),
            lattice.edge_count()
        ));
    }
    let mut uf = UnionFind::new(lattice.node_count());
    for e in sample.active.iter_ones() {
        let (a, b) = lattice.edges[e];
        uf.union(a, b);
    }
    Ok(uf.largest() as f64 / lattice.node_count() as f64)
}

#[derive(Debug, Clone)]
pub struct TrajectorySpec {
    pub lattice: LatticeSpec,
    /// Node displacement std-dev; zero keeps the regular lattice.
    pub sigma: f64,
    pub model: FrequencyModel,
    /// Randomly permute each disorder realization's frequencies before
    /// sampling.
    pub reshuffle: bool,
    pub times: Vec<f64>,
    pub n_disorder: usize,
    pub n_activation: usize,
    pub seed: u64,
    /// Reuse one uniform per edge across all time points of an activation
    /// realization.
    pub coupled: bool,
    /// Extra disorder realizations for noisy time points.
    pub refine: Option<Refinement>,
    pub budget: u128,
}

/// After the base `n_disorder` realizations, keep adding realizations at
/// the time points whose order-parameter standard error exceeds
/// `target_stderr`, up to `max_disorder` realizations in total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub target_stderr: f64,
    pub max_disorder: usize,
}

impl TrajectorySpec {
    pub fn new(lattice: LatticeSpec, model: FrequencyModel, times: Vec<f64>) -> Self {
        TrajectorySpec {
            lattice,
            sigma: 0.0,
            model,
            reshuffle: false,
            times,
            n_disorder: 4,
            n_activation: 20,
            seed: 0,
            coupled: false,
            refine: None,
            budget: DEFAULT_BUDGET,
        }
    }

    /// Nodes × samples × time points, counting every refinement
    /// realization as if all time points needed it.
    pub fn node_evaluations(&self) -> u128 {
        let disorder = self.refine.map_or(self.n_disorder, |r| r.max_disorder.max(self.n_disorder));
        self.lattice.node_count() as u128
            * disorder as u128
            * self.n_activation as u128
            * self.times.len() as u128
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        self.model.validate()?;
        if self.times.is_empty() {
            return config("times must be nonempty");
        }
        if self.times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return config("times must be finite and nonnegative");
        }
        if self.times.windows(2).any(|w| w[1] < w[0]) {
            return config("times must be sorted ascending");
        }
        if self.n_disorder == 0 || self.n_activation == 0 {
            return config("n_disorder and n_activation must be positive");
        }
        if !(self.sigma >= 0.0) {
            return config("sigma must be nonnegative");
        }
        if let Some(r) = self.refine {
            if !(r.target_stderr > 0.0) || r.max_disorder < self.n_disorder {
                return config("refinement needs target_stderr > 0 and max_disorder >= n_disorder");
            }
        }
        let required = self.node_evaluations();
        if required > self.budget {
            return Err(Error::Budget { required, budget: self.budget });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// Mean fraction of active edges.
    pub p_hat: Vec<f64>,
    /// Mean largest-component fraction.
    pub order_param: Vec<f64>,
    pub order_stderr: Vec<f64>,
    pub p_stderr: Vec<f64>,
    /// Samples behind each time point.
    pub samples: Vec<u64>,
    pub n_disorder: usize,
    pub n_activation: usize,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub(crate) fn from_stats(
        times: Vec<f64>,
        stats: Vec<(RunningStats, RunningStats)>,
        n_disorder: usize,
        n_activation: usize,
    ) -> Self {
        TrajectoryRecord {
            times,
            p_hat: stats.iter().map(|s| s.0.mean()).collect(),
            order_param: stats.iter().map(|s| s.1.mean()).collect(),
            order_stderr: stats.iter().map(|s| s.1.std_err()).collect(),
            p_stderr: stats.iter().map(|s| s.0.std_err()).collect(),
            samples: stats.iter().map(|s| s.1.count()).collect(),
            n_disorder,
            n_activation,
        }
    }
}

/// One disorder realization: perturbed lattice plus (optionally reshuffled)
/// frequencies. All seeds derive from `(seed, DISORDER, index)`.
pub fn disorder_realization(
    spec: &TrajectorySpec,
    index: usize,
) -> Result<(PerturbedLattice, FrequencyAssignment)> {
    let base = lattice::generate_lattice(spec.lattice)?;
    let dseed = rng::derive_seed(spec.seed, &[purpose::DISORDER, index as u64]);
    let lat = lattice::perturb(&base, spec.sigma, dseed)?;
    let mut assignment = frequency::assign(&lat, &spec.model, dseed)?;
    if spec.reshuffle {
        assignment = frequency::reshuffle(&assignment, dseed);
    }
    Ok((lat, assignment))
}

/// Average the active fraction and largest-component fraction over
/// `n_disorder × n_activation` samples at every time point, plus any
/// refinement realizations.
pub fn run_trajectory(spec: &TrajectorySpec) -> Result<TrajectoryRecord> {
    spec.validate()?;
    let n_times = spec.times.len();
    let mut totals = vec![(RunningStats::new(), RunningStats::new()); n_times];
    let all: Vec<usize> = (0..n_times).collect();
    let max_disorder = spec.refine.map_or(spec.n_disorder, |r| r.max_disorder);
    for d in 0..max_disorder {
        let pending: Vec<usize> = if d < spec.n_disorder {
            all.clone()
        } else {
            let target = spec.refine.map_or(0.0, |r| r.target_stderr);
            all.iter().copied().filter(|&k| totals[k].1.std_err() > target).collect()
        };
        if pending.is_empty() {
            break;
        }
        let (lat, assignment) = disorder_realization(spec, d)?;
        let n_nodes = lat.node_count() as f64;
        let n_edges = lat.edge_count() as f64;
        let per_time: Vec<(RunningStats, RunningStats)> = pending
            .par_iter()
            .map_init(
                || (UnionFind::new(lat.node_count()), Vec::with_capacity(lat.edge_count())),
                |(uf, phi), &k| {
                    let t = spec.times[k];
                    phi.clear();
                    phi.extend(assignment.omegas.iter().map(|&w| conversion_probability(w, t)));
                    let mut p_stats = RunningStats::new();
                    let mut order_stats = RunningStats::new();
                    for a in 0..spec.n_activation {
                        let path: &[u64] = if spec.coupled {
                            &[purpose::ACTIVATION, d as u64, a as u64]
                        } else {
                            &[purpose::ACTIVATION, d as u64, k as u64, a as u64]
                        };
                        let mut rng = rng::stream(spec.seed, path);
                        let active = activate_into(&lat.edges, |e| phi[e], &mut rng, uf);
                        p_stats.push(active as f64 / n_edges);
                        order_stats.push(uf.largest() as f64 / n_nodes);
                    }
                    (p_stats, order_stats)
                },
            )
            .collect();
        for (&k, part) in pending.iter().zip(&per_time) {
            totals[k].0.merge(&part.0);
            totals[k].1.merge(&part.1);
        }
    }
    Ok(TrajectoryRecord::from_stats(spec.times.clone(), totals, spec.n_disorder, spec.n_activation))
}

/// `(p̂, P̂)` pairs in time order, duplicates kept.
pub fn parametric_pp(record: &TrajectoryRecord) -> Result<Vec<(f64, f64)>> {
    if record.is_empty() {
        return config("trajectory record is empty");
    }
    Ok(record.p_hat.iter().copied().zip(record.order_param.iter().copied()).collect())
}

/// Index pairs `(i, j)`, `i < j`, whose points differ by less than
/// `max_dp` in `p` and by more than `min_gap` in the order parameter.
pub fn branch_witnesses(pairs: &[(f64, f64)], max_dp: f64, min_gap: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            if (pairs[i].0 - pairs[j].0).abs() < max_dp && (pairs[i].1 - pairs[j].1).abs() > min_gap {
                out.push((i, j));
            }
        }
    }
    out
}

/// Largest order-parameter difference over all pairs closer than `max_dp`
/// in `p`, with the pair attaining it.
pub fn max_gap_at_matched_p(pairs: &[(f64, f64)], max_dp: f64) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            if (pairs[i].0 - pairs[j].0).abs() < max_dp {
                let gap = (pairs[i].1 - pairs[j].1).abs();
                if best.is_none_or(|b| gap > b.2) {
                    best = Some((i, j, gap));
                }
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticPoint {
    pub p: f64,
    pub order_param: f64,
    pub stderr: f64,
}

/// Uniform bond percolation `P₀(p)` on a regular lattice.
///
/// Sample `s` draws one uniform `u_e` per edge from `(seed, STATIC, s)` and
/// evaluates every grid point with the active set `{e : u_e < p}`, so each
/// sample's curve is monotone in `p`. Edges are bucketed by the first grid
/// point that activates them, which makes a full sweep cost one pass of
/// unions.
pub fn static_percolation_curve(
    spec: LatticeSpec,
    p_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<StaticPoint>> {
    if p_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return config("p grid must lie in [0, 1]");
    }
    if n_samples == 0 {
        return config("n_samples must be positive");
    }
    let lat = lattice::generate_lattice(spec)?;
    let mut order: Vec<usize> = (0..p_grid.len()).collect();
    order.sort_by(|&a, &b| p_grid[a].total_cmp(&p_grid[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| p_grid[i]).collect();
    let n_nodes = lat.node_count() as f64;

    let per_sample: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map_init(
            || (UnionFind::new(lat.node_count()), vec![Vec::new(); sorted.len() + 1]),
            |(uf, buckets), s| {
                uf.reset();
                buckets.iter_mut().for_each(Vec::clear);
                let mut rng = rng::stream(seed, &[purpose::STATIC, s as u64]);
                for e in 0..lat.edge_count() {
                    let u = rng::unit(&mut rng);
                    // First grid point with u < p.
                    let slot = sorted.partition_point(|&p| p <= u);
                    buckets[slot].push(e as u32);
                }
                let mut out = Vec::with_capacity(sorted.len());
                for bucket in buckets.iter().take(sorted.len()) {
                    for &e in bucket {
                        let (a, b) = lat.edges[e as usize];
                        uf.union(a, b);
                    }
                    out.push(uf.largest() as f64 / n_nodes);
                }
                out
            },
        )
        .collect();

    let mut result = vec![StaticPoint { p: 0.0, order_param: 0.0, stderr: 0.0 }; p_grid.len()];
    for (rank, &orig) in order.iter().enumerate() {
        let stats: RunningStats = per_sample.iter().map(|v| v[rank]).collect();
        result[orig] = StaticPoint { p: p_grid[orig], order_param: stats.mean(), stderr: stats.std_err() };
    }
    Ok(result)
}

/// Linear interpolation on a curve sorted by abscissa; `None` outside its
/// range.
pub fn interpolate(curve: &[(f64, f64)], x: f64) -> Option<f64> {
    let first = curve.first()?;
    let last = curve.last()?;
    if x < first.0 || x > last.0 {
        return None;
    }
    let i = curve.partition_point(|&(cx, _)| cx < x);
    if i == 0 {
        return Some(first.1);
    }
    let (x0, y0) = curve[i - 1];
    let (x1, y1) = curve[i];
    if x1 == x0 {
        return Some(y1);
    }
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// Crossings of the finite-size-scaled order parameters `L^x·P_L(p)` of two
/// system sizes evaluated on the same `p` grid, located by linear
/// interpolation of their difference. With `x = β/ν` the curves cross at
/// the percolation threshold.
pub fn scaled_crossings(
    small: &[StaticPoint],
    side_small: usize,
    large: &[StaticPoint],
    side_large: usize,
    exponent: f64,
) -> Result<Vec<f64>> {
    if small.len() != large.len() || small.iter().zip(large).any(|(a, b)| a.p != b.p) {
        return config("curves must share the same p grid");
    }
    let (ss, sl) = ((side_small as f64).powf(exponent), (side_large as f64).powf(exponent));
    let diff: Vec<(f64, f64)> = small
        .iter()
        .zip(large)
        .map(|(a, b)| (a.p, ss * a.order_param - sl * b.order_param))
        .collect();
    let mut out = Vec::new();
    for w in diff.windows(2) {
        let ((p0, d0), (p1, d1)) = (w[0], w[1]);
        if d0 == 0.0 {
            out.push(p0);
        } else if d0 * d1 < 0.0 {
            out.push(p0 + (p1 - p0) * d0 / (d0 - d1));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{generate_lattice, Boundary, Topology};
    use std::f64::consts::PI;

    fn uniform(lat: &PerturbedLattice, omega: f64) -> FrequencyAssignment {
        frequency::assign(lat, &FrequencyModel::Uniform { omega }, 0).unwrap()
    }

    #[test]
    fn t_zero_all_inactive() {
        let lat = generate_lattice(LatticeSpec::square(16).unwrap()).unwrap();
        let s = sample_activation(&lat, &uniform(&lat, 1.0), 0.0, 1).unwrap();
        assert_eq!(s.active_count(), 0);
        let f = largest_component_fraction(&lat, &s).unwrap();
        assert_eq!(f, 1.0 / 256.0);
    }

    #[test]
    fn quarter_period_all_active() {
        let lat = generate_lattice(LatticeSpec::square(16).unwrap()).unwrap();
        let s = sample_activation(&lat, &uniform(&lat, 1.0), PI / 2.0, 1).unwrap();
        assert_eq!(s.active_count(), lat.edge_count());
        assert_eq!(largest_component_fraction(&lat, &s).unwrap(), 1.0);
    }

    #[test]
    fn hand_picked_path() {
        let spec = LatticeSpec::new(Topology::Square, 3, Boundary::Open).unwrap();
        let lat = generate_lattice(spec).unwrap();
        // Path 0-1-2-5-8 activates 5 of 9 nodes.
        let mut active = bitvec![0; lat.edge_count()];
        for (u, v) in [(0, 1), (1, 2), (2, 5), (5, 8)] {
            let e = lat.edges.iter().position(|&x| x == (u, v)).unwrap();
            active.set(e, true);
        }
        let s = ActivationSample { active, time: 0.0, seed: 0 };
        assert_eq!(largest_component_fraction(&lat, &s).unwrap(), 5.0 / 9.0);
    }

    #[test]
    fn mismatched_sizes_rejected() {
        let lat = generate_lattice(LatticeSpec::square(4).unwrap()).unwrap();
        let other = generate_lattice(LatticeSpec::square(5).unwrap()).unwrap();
        assert!(sample_activation(&lat, &uniform(&other, 1.0), 1.0, 0).is_err());
        let s = sample_activation(&other, &uniform(&other, 1.0), 1.0, 0).unwrap();
        assert!(largest_component_fraction(&lat, &s).is_err());
    }

    #[test]
    fn trajectory_validation() {
        let spec = LatticeSpec::square(8).unwrap();
        let mut ts = TrajectorySpec::new(spec, FrequencyModel::Uniform { omega: 1.0 }, vec![]);
        assert!(ts.validate().is_err());
        ts.times = vec![2.0, 1.0];
        assert!(ts.validate().is_err());
        ts.times = vec![1.0];
        ts.refine = Some(Refinement { target_stderr: 0.01, max_disorder: 2 });
        assert!(ts.validate().is_err());
        ts.refine = None;
        ts.budget = 10;
        assert!(matches!(ts.validate(), Err(Error::Budget { .. })));
    }

    #[test]
    fn refinement_targets_noisy_times() {
        let spec = LatticeSpec::square(16).unwrap();
        let mut ts = TrajectorySpec::new(spec, FrequencyModel::Uniform { omega: 1.0 }, vec![0.0, 1.0, 1.5]);
        ts.n_disorder = 2;
        ts.n_activation = 4;
        let base = run_trajectory(&ts).unwrap();
        ts.refine = Some(Refinement { target_stderr: 0.005, max_disorder: 6 });
        let refined = run_trajectory(&ts).unwrap();
        // t = 0 has no activation at all, so its estimate is exact.
        assert_eq!(refined.samples[0], 8);
        assert!(refined.samples[1] > 8);
        assert_eq!(refined.samples.iter().max(), Some(&24));
        assert_eq!(base.samples, vec![8, 8, 8]);
    }

    #[test]
    fn parametric_keeps_order_and_duplicates() {
        let rec = TrajectoryRecord {
            times: vec![0.0, 1.0, 2.0],
            p_hat: vec![0.5, 0.5, 0.2],
            order_param: vec![0.1, 0.1, 0.0],
            order_stderr: vec![0.0; 3],
            p_stderr: vec![0.0; 3],
            samples: vec![1; 3],
            n_disorder: 1,
            n_activation: 1,
        };
        let pp = parametric_pp(&rec).unwrap();
        assert_eq!(pp, vec![(0.5, 0.1), (0.5, 0.1), (0.2, 0.0)]);
        let empty = TrajectoryRecord { times: vec![], p_hat: vec![], order_param: vec![], samples: vec![], ..rec };
        assert!(parametric_pp(&empty).is_err());
    }

    #[test]
    fn witness_search() {
        let pairs = [(0.5, 0.1), (0.501, 0.4), (0.7, 0.9), (0.5005, 0.12)];
        assert_eq!(branch_witnesses(&pairs, 0.005, 0.05), vec![(0, 1), (1, 3)]);
        let (i, j, gap) = max_gap_at_matched_p(&pairs, 0.005).unwrap();
        assert_eq!((i, j), (0, 1));
        assert!((gap - 0.3).abs() < 1e-12);
        assert!(max_gap_at_matched_p(&[(0.1, 0.0), (0.9, 1.0)], 0.005).is_none());
    }

    #[test]
    fn static_curve_endpoints() {
        let spec = LatticeSpec::square(16).unwrap();
        let c = static_percolation_curve(spec, &[1.0, 0.0, 0.5], 8, 3).unwrap();
        assert_eq!(c[0].order_param, 1.0);
        assert_eq!(c[1].order_param, 1.0 / 256.0);
        assert!(c[2].order_param > 1.0 / 256.0 && c[2].order_param < 1.0);
        assert!(static_percolation_curve(spec, &[1.5], 1, 0).is_err());
    }

    #[test]
    fn interpolation() {
        let c = [(0.0, 0.0), (1.0, 2.0), (2.0, 2.0)];
        assert_eq!(interpolate(&c, 0.5), Some(1.0));
        assert_eq!(interpolate(&c, 1.5), Some(2.0));
        assert_eq!(interpolate(&c, 0.0), Some(0.0));
        assert_eq!(interpolate(&c, 2.5), None);
    }
}
