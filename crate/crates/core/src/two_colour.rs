//! Two-colour bond percolation on the periodic square lattice.
//!
//! Half of the edges are colour 1 (active with probability `φ₁`) and half
//! colour 2 (active with `φ₂`). In the constrained variant colours alternate
//! along every row of horizontal edges and every column of vertical edges,
//! with an independent fair phase bit per row and per column. The
//! reshuffled variant places the same colour multiset uniformly at random.
//!
//! Monte Carlo estimates of `S(φ₁, φ₂)` use common random numbers: sample
//! `s` draws its colouring from `(seed, COLOURING, s)` and its activation
//! uniforms from `(seed, ACTIVATION, s)` regardless of the point being
//! evaluated, so every sample's surface is monotone in both arguments.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::conversion_probability;
use crate::error::{config, Error, Result};
use crate::frequency::{FrequencyAssignment, FrequencyModel};
use crate::lattice::{self, LatticeSpec, Orientation, PerturbedLattice};
use crate::percolation::{activate_into, TrajectoryRecord, DEFAULT_BUDGET};
use crate::rng::{self, purpose};
use crate::stats::RunningStats;
use crate::union_find::UnionFind;

/// Samples per adaptive block.
const BLOCK: usize = 32;

#[derive(Debug, Clone)]
pub struct ColouredLattice {
    pub lattice: Arc<PerturbedLattice>,
    /// Colour of each edge, 1 or 2.
    pub colours: Vec<u8>,
    pub constrained: bool,
    pub seed: u64,
}

fn square_lattice(side: usize) -> Result<PerturbedLattice> {
    if side % 2 != 0 {
        return config(format!("two-colour lattice needs an even side, got {side}"));
    }
    lattice::generate_lattice(LatticeSpec::square(side)?)
}

/// Fill `colours` with the alternating pattern. Edge `2v` is the horizontal
/// edge leaving node `v = (x, y)`, edge `2v + 1` the vertical one.
fn fill_constrained(side: usize, seed: u64, colours: &mut Vec<u8>) {
    let mut rng = rng::stream(seed, &[purpose::COLOURING]);
    let row_phase: Vec<usize> = (0..side).map(|_| usize::from(rng::unit(&mut rng) < 0.5)).collect();
    let col_phase: Vec<usize> = (0..side).map(|_| usize::from(rng::unit(&mut rng) < 0.5)).collect();
    colours.clear();
    for y in 0..side {
        for x in 0..side {
            colours.push(1 + ((x + row_phase[y]) & 1) as u8);
            colours.push(1 + ((y + col_phase[x]) & 1) as u8);
        }
    }
}

fn fill_sample_colouring(side: usize, constrained: bool, seed: u64, colours: &mut Vec<u8>) {
    fill_constrained(side, seed, colours);
    if !constrained {
        let mut rng = rng::stream(seed, &[purpose::RESHUFFLE]);
        colours.shuffle(&mut rng);
    }
}

/// Constrained two-colour lattice of side `side` (even, periodic).
pub fn generate_constrained(side: usize, seed: u64) -> Result<ColouredLattice> {
    let lat = square_lattice(side)?;
    let mut colours = Vec::with_capacity(lat.edge_count());
    fill_constrained(side, seed, &mut colours);
    Ok(ColouredLattice { lattice: Arc::new(lat), colours, constrained: true, seed })
}

/// Uniform random permutation of the colours of `coloured`.
pub fn generate_reshuffled(coloured: &ColouredLattice, seed: u64) -> ColouredLattice {
    let mut colours = coloured.colours.clone();
    let mut rng = rng::stream(seed, &[purpose::RESHUFFLE]);
    colours.shuffle(&mut rng);
    ColouredLattice { lattice: coloured.lattice.clone(), colours, constrained: false, seed }
}

impl ColouredLattice {
    pub fn side(&self) -> usize {
        self.lattice.spec.side
    }

    pub fn colour_counts(&self) -> (usize, usize) {
        let ones = self.colours.iter().filter(|&&c| c == 1).count();
        (ones, self.colours.len() - ones)
    }

    /// Fraction of adjacent edge pairs with the given orientation that share
    /// a colour.
    pub fn colour_agreement(&self, orientation: Orientation) -> Result<f64> {
        let pairs = self.lattice.adjacent_edge_pairs(orientation)?;
        let same = pairs
            .iter()
            .filter(|&&(a, b)| self.colours[a as usize] == self.colours[b as usize])
            .count();
        Ok(same as f64 / pairs.len() as f64)
    }

    /// Frequencies `omega1` on colour 1 and `omega2` on colour 2.
    pub fn as_assignment(&self, omega1: f64, omega2: f64) -> FrequencyAssignment {
        FrequencyAssignment {
            omegas: self.colours.iter().map(|&c| if c == 1 { omega1 } else { omega2 }).collect(),
            model: FrequencyModel::ThresholdDistance { omega1, omega2, lambda: 1.0 },
            seed: self.seed,
        }
    }
}

fn check_phi(phi1: f64, phi2: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&phi1) || !(0.0..=1.0).contains(&phi2) {
        return config(format!("activation probabilities ({phi1}, {phi2}) must lie in [0, 1]"));
    }
    Ok(())
}

/// Mean and standard error of the largest-component fraction on a fixed
/// colouring over `n_samples` activations.
pub fn giant_fraction(
    coloured: &ColouredLattice,
    phi1: f64,
    phi2: f64,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_phi(phi1, phi2)?;
    if n_samples == 0 {
        return config("n_samples must be positive");
    }
    let lat = &coloured.lattice;
    let n_nodes = lat.node_count() as f64;
    let values: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map_init(
            || UnionFind::new(lat.node_count()),
            |uf, s| {
                let mut rng = rng::stream(seed, &[purpose::ACTIVATION, s as u64]);
                activate_into(
                    &lat.edges,
                    |e| if coloured.colours[e] == 1 { phi1 } else { phi2 },
                    &mut rng,
                    uf,
                );
                uf.largest() as f64 / n_nodes
            },
        )
        .collect();
    let stats: RunningStats = values.into_iter().collect();
    Ok((stats.mean(), stats.std_err()))
}

/// How many samples to spend per evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub min_samples: usize,
    pub max_samples: usize,
    /// Keep adding blocks of samples to a point until its standard error is
    /// at most this value (or `max_samples` is reached).
    pub target_stderr: Option<f64>,
}

impl Sampling {
    pub fn fixed(n: usize) -> Self {
        Sampling { min_samples: n, max_samples: n, target_stderr: None }
    }

    pub fn adaptive(min_samples: usize, max_samples: usize, target_stderr: f64) -> Self {
        Sampling { min_samples, max_samples, target_stderr: Some(target_stderr) }
    }

    fn validate(&self) -> Result<()> {
        if self.min_samples == 0 || self.max_samples < self.min_samples {
            return config("sampling needs 1 <= min_samples <= max_samples");
        }
        if let Some(t) = self.target_stderr {
            if !(t > 0.0) {
                return config("target stderr must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointEstimate {
    pub phi1: f64,
    pub phi2: f64,
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Estimate `S(φ₁, φ₂)` at each point, drawing a fresh colouring per sample
/// (constrained or reshuffled) shared by all points.
pub fn estimate_points(
    side: usize,
    points: &[(f64, f64)],
    sampling: Sampling,
    constrained: bool,
    seed: u64,
    budget: u128,
) -> Result<Vec<PointEstimate>> {
    sampling.validate()?;
    for &(a, b) in points {
        check_phi(a, b)?;
    }
    let required = (side * side) as u128 * points.len() as u128 * sampling.max_samples as u128;
    if required > budget {
        return Err(Error::Budget { required, budget });
    }
    let lat = square_lattice(side)?;
    let n_nodes = lat.node_count() as f64;
    let mut stats = vec![RunningStats::new(); points.len()];
    let mut next = 0;
    while next < sampling.max_samples {
        let pending: Vec<usize> = (0..points.len())
            .filter(|&i| {
                let s = &stats[i];
                (s.count() as usize) < sampling.min_samples
                    || sampling.target_stderr.is_some_and(|t| s.std_err() > t)
            })
            .collect();
        if pending.is_empty() {
            break;
        }
        let end = if next < sampling.min_samples {
            (next + BLOCK).min(sampling.min_samples)
        } else {
            (next + BLOCK).min(sampling.max_samples)
        };
        let colourings: Vec<Vec<u8>> = (next..end)
            .into_par_iter()
            .map(|s| {
                let mut c = Vec::with_capacity(lat.edge_count());
                let cseed = rng::derive_seed(seed, &[purpose::COLOURING, s as u64]);
                fill_sample_colouring(side, constrained, cseed, &mut c);
                c
            })
            .collect();
        let width = end - next;
        let values: Vec<f64> = (0..pending.len() * width)
            .into_par_iter()
            .map_init(
                || UnionFind::new(lat.node_count()),
                |uf, task| {
                    let (phi1, phi2) = points[pending[task / width]];
                    let offset = task % width;
                    let colours = &colourings[offset];
                    let s = (next + offset) as u64;
                    let mut rng = rng::stream(seed, &[purpose::ACTIVATION, s]);
                    activate_into(
                        &lat.edges,
                        |e| if colours[e] == 1 { phi1 } else { phi2 },
                        &mut rng,
                        uf,
                    );
                    uf.largest() as f64 / n_nodes
                },
            )
            .collect();
        for (k, &i) in pending.iter().enumerate() {
            for &v in &values[k * width..(k + 1) * width] {
                stats[i].push(v);
            }
        }
        next = end;
    }
    Ok(points
        .iter()
        .zip(&stats)
        .map(|(&(phi1, phi2), s)| PointEstimate {
            phi1,
            phi2,
            mean: s.mean(),
            stderr: s.std_err(),
            samples: s.count() as usize,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    /// Shared grid for both axes, `0, h, 2h, …, 1`.
    pub grid: Vec<f64>,
    /// Row-major `S[i][j] = S(grid[i], grid[j])`.
    pub s: Vec<f64>,
    pub stderr: Vec<f64>,
    pub samples: Vec<usize>,
    pub side: usize,
    pub constrained: bool,
}

impl PhaseDiagram {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.s[i * self.grid.len() + j]
    }

    pub fn stderr_at(&self, i: usize, j: usize) -> f64 {
        self.stderr[i * self.grid.len() + j]
    }

    /// `(φ₁, φ₂, S, stderr)` rows in row-major order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        let n = self.grid.len();
        (0..n * n).map(move |k| (self.grid[k / n], self.grid[k % n], self.s[k], self.stderr[k]))
    }
}

/// Grid `0, h, …, 1` for a step that divides 1.
pub fn unit_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return config(format!("grid step must lie in (0, 1], got {step}"));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() > 1e-9 {
        return config(format!("grid step {step} does not divide 1"));
    }
    let n = n as usize;
    Ok((0..=n).map(|i| i as f64 / n as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub side: usize,
    pub grid_step: f64,
    pub sampling: Sampling,
    pub constrained: bool,
    pub seed: u64,
    pub budget: u128,
}

impl SweepSpec {
    pub fn new(side: usize, grid_step: f64, n_samples: usize, constrained: bool, seed: u64) -> Self {
        SweepSpec {
            side,
            grid_step,
            sampling: Sampling::fixed(n_samples),
            constrained,
            seed,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// `S(φ₁, φ₂)` on the full grid.
pub fn sweep_phase_diagram(spec: &SweepSpec) -> Result<PhaseDiagram> {
    let grid = unit_grid(spec.grid_step)?;
    let points: Vec<(f64, f64)> =
        grid.iter().flat_map(|&a| grid.iter().map(move |&b| (a, b))).collect();
    let est = estimate_points(spec.side, &points, spec.sampling, spec.constrained, spec.seed, spec.budget)?;
    Ok(PhaseDiagram {
        grid,
        s: est.iter().map(|e| e.mean).collect(),
        stderr: est.iter().map(|e| e.stderr).collect(),
        samples: est.iter().map(|e| e.samples).collect(),
        side: spec.side,
        constrained: spec.constrained,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPoint {
    pub t: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// `(φ₁ + φ₂)/2`.
    pub p: f64,
}

/// `φ₁(t) = 1 − |cos t|`, `φ₂(t) = 1 − |cos(Ω̃t)|`.
pub fn gamma_trajectory(omega_ratio: f64, times: &[f64]) -> Result<Vec<GammaPoint>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return config("times must be sorted ascending");
    }
    Ok(times
        .iter()
        .map(|&t| {
            let phi1 = conversion_probability(1.0, t);
            let phi2 = conversion_probability(omega_ratio, t);
            GammaPoint { t, phi1, phi2, p: 0.5 * (phi1 + phi2) }
        })
        .collect())
}

/// `P(t) = S(γ(t))` along the dynamical curve.
pub fn dynamic_two_colour(
    side: usize,
    omega_ratio: f64,
    times: &[f64],
    sampling: Sampling,
    constrained: bool,
    seed: u64,
    budget: u128,
) -> Result<(Vec<GammaPoint>, TrajectoryRecord)> {
    if times.is_empty() {
        return config("times must be nonempty");
    }
    let gamma = gamma_trajectory(omega_ratio, times)?;
    let points: Vec<(f64, f64)> = gamma.iter().map(|g| (g.phi1, g.phi2)).collect();
    let est = estimate_points(side, &points, sampling, constrained, seed, budget)?;
    let record = TrajectoryRecord {
        times: times.to_vec(),
        p_hat: gamma.iter().map(|g| g.p).collect(),
        order_param: est.iter().map(|e| e.mean).collect(),
        order_stderr: est.iter().map(|e| e.stderr).collect(),
        p_stderr: vec![0.0; times.len()],
        samples: est.iter().map(|e| e.samples as u64).collect(),
        n_disorder: sampling.max_samples,
        n_activation: 1,
    };
    Ok((gamma, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn small_constrained_lattice() {
        let c = generate_constrained(2, 5).unwrap();
        assert_eq!(c.colours.len(), 8);
        let horiz: Vec<u8> = c.colours.iter().step_by(2).copied().collect();
        let vert: Vec<u8> = c.colours.iter().skip(1).step_by(2).copied().collect();
        assert_eq!(horiz.iter().filter(|&&x| x == 1).count(), 2);
        assert_eq!(vert.iter().filter(|&&x| x == 1).count(), 2);
    }

    #[test]
    fn odd_side_rejected() {
        assert!(matches!(generate_constrained(5, 0), Err(Error::Config(_))));
    }

    #[test]
    fn strict_alternation() {
        for seed in 0..5 {
            let c = generate_constrained(12, seed).unwrap();
            assert_eq!(c.colour_counts(), (144, 144));
            assert_eq!(c.colour_agreement(Orientation::Collinear).unwrap(), 0.0);
        }
    }

    #[test]
    fn reshuffle_keeps_counts() {
        let c = generate_constrained(16, 1).unwrap();
        let r = generate_reshuffled(&c, 2);
        assert!(!r.constrained);
        assert_eq!(r.colour_counts(), c.colour_counts());
        assert_ne!(r.colours, c.colours);
    }

    #[test]
    fn giant_fraction_extremes() {
        let c = generate_constrained(8, 1).unwrap();
        assert_eq!(giant_fraction(&c, 1.0, 1.0, 3, 0).unwrap(), (1.0, 0.0));
        assert_eq!(giant_fraction(&c, 0.0, 0.0, 3, 0).unwrap(), (1.0 / 64.0, 0.0));
        assert!(giant_fraction(&c, 1.1, 0.0, 3, 0).is_err());
    }

    #[test]
    fn grid_validation() {
        assert_eq!(unit_grid(0.25).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(unit_grid(0.02).unwrap().len(), 51);
        assert!(unit_grid(0.3).is_err());
        assert!(unit_grid(0.0).is_err());
    }

    #[test]
    fn gamma_examples() {
        let g = gamma_trajectory(2.0, &[0.0, PI / 3.0, PI / 2.0]).unwrap();
        assert_eq!((g[0].phi1, g[0].phi2), (0.0, 0.0));
        assert!((g[1].phi1 - 0.5).abs() < 1e-12 && (g[1].phi2 - 0.5).abs() < 1e-12);
        assert!((g[2].phi1 - 1.0).abs() < 1e-12 && g[2].phi2.abs() < 1e-12);
        assert!((g[2].p - 0.5).abs() < 1e-12);
        assert!(gamma_trajectory(2.0, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn adaptive_sampling_stops_at_target() {
        let est = estimate_points(
            16,
            &[(1.0, 1.0), (0.5, 0.5)],
            Sampling::adaptive(4, 200, 0.02),
            true,
            3,
            DEFAULT_BUDGET,
        )
        .unwrap();
        assert_eq!(est[0].samples, 4);
        assert_eq!(est[0].mean, 1.0);
        assert!(est[1].stderr <= 0.02 || est[1].samples == 200);
        assert!(est[1].samples > 4);
    }

    #[test]
    fn sweep_corners_and_budget() {
        let spec = SweepSpec::new(8, 0.5, 4, false, 1);
        let d = sweep_phase_diagram(&spec).unwrap();
        assert_eq!(d.grid.len(), 3);
        assert_eq!(d.at(2, 2), 1.0);
        assert_eq!(d.at(0, 0), 1.0 / 64.0);
        let mut tight = spec;
        tight.budget = 100;
        assert!(matches!(sweep_phase_diagram(&tight), Err(Error::Budget { .. })));
    }
}
