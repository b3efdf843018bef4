//! Statistics of the distance disorder: the Rice law of a single edge
//! length, the long-edge probability `η`, the joint short-short probability
//! `β` of two adjacent edges, and the Pearson coefficient derived from them.
//!
//! Two-edge statistics use a four-node motif: node 0 at the origin with
//! neighbours 1 at `(−1, 0)`, 2 at `(1, 0)` and 3 at `(0, 1)`, every node
//! independently displaced by an isotropic Gaussian of per-coordinate
//! standard deviation `σ`. Edges `10` and `02` are collinear, `10` and `03`
//! perpendicular.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::frequency::FrequencyAssignment;
use crate::lattice::{Orientation, PerturbedLattice};
use crate::numeric::{integrate_to_infinity, integrate_with_breaks};
use crate::rng::{self, purpose};
use crate::special::bessel_i0e;

/// Minimum Monte Carlo size for `β`.
pub const MIN_BETA_SAMPLES: usize = 10_000;

const CHUNK: usize = 1 << 14;

/// Tag separating the single-pair `η` stream from the motif stream.
const PAIR_STREAM: u64 = 0xE7A;

/// Density of `|ν + Δ|` where `Δ` is a 2D Gaussian with per-coordinate
/// variance `2σ²`.
pub fn rice_pdf(x: f64, nu: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return domain(format!("rice density needs sigma > 0, got {sigma}"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    let s2 = 2.0 * sigma * sigma;
    let z = x * nu / s2;
    // e^{-(x²+ν²)/2s²} I₀(z) = e^{-(x−ν)²/2s²} I₀e(z)
    Ok(x / s2 * (-(x - nu) * (x - nu) / (2.0 * s2)).exp() * bessel_i0e(z))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EtaMethod {
    Quadrature { tol: f64 },
    MonteCarlo { n_samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Quadrature error bound or Monte Carlo standard error.
    pub error: f64,
}

fn gaussian_pair(rng: &mut rng::StreamRng) -> [f64; 2] {
    [StandardNormal.sample(rng), StandardNormal.sample(rng)]
}

/// `η(σ, λ) = P[d > λ]` for a unit-spaced pair of displaced nodes.
pub fn eta(sigma: f64, lambda: f64, method: EtaMethod) -> Result<Estimate> {
    if !(sigma > 0.0) {
        return domain(format!("eta needs sigma > 0, got {sigma}"));
    }
    if !(lambda >= 0.0) {
        return config(format!("lambda must be nonnegative, got {lambda}"));
    }
    match method {
        EtaMethod::Quadrature { tol } => {
            let pdf = |x: f64| rice_pdf(x, 1.0, sigma).unwrap_or(0.0);
            // Integrate the short side when it is the smaller piece.
            if lambda < 1.0 {
                let breaks: Vec<f64> = [1.0 - 10.0 * sigma].into_iter().filter(|&b| b > 0.0 && b < lambda).collect();
                let below = integrate_with_breaks(pdf, 0.0, lambda, &breaks, tol)?;
                Ok(Estimate { value: (1.0 - below.value).clamp(0.0, 1.0), error: below.error })
            } else {
                let above = integrate_to_infinity(pdf, lambda, tol)?;
                Ok(Estimate { value: above.value.clamp(0.0, 1.0), error: above.error })
            }
        }
        EtaMethod::MonteCarlo { n_samples, seed } => {
            if n_samples == 0 {
                return config("n_samples must be positive");
            }
            let chunks = n_samples.div_ceil(CHUNK);
            let long: usize = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = rng::stream(seed, &[purpose::MOTIF, PAIR_STREAM, c as u64]);
                    let n = CHUNK.min(n_samples - c * CHUNK);
                    (0..n)
                        .filter(|_| {
                            let a = gaussian_pair(&mut rng);
                            let b = gaussian_pair(&mut rng);
                            let dx = 1.0 + sigma * (b[0] - a[0]);
                            let dy = sigma * (b[1] - a[1]);
                            dx.hypot(dy) > lambda
                        })
                        .count()
                })
                .sum();
            let p = long as f64 / n_samples as f64;
            Ok(Estimate { value: p, error: (p * (1.0 - p) / n_samples as f64).sqrt() })
        }
    }
}

/// Joint counts over the four short/long cells for one edge pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub short_short: u64,
    pub short_long: u64,
    pub long_short: u64,
    pub long_long: u64,
}

impl CellCounts {
    pub fn total(&self) -> u64 {
        self.short_short + self.short_long + self.long_short + self.long_long
    }

    fn add(&mut self, first_long: bool, second_long: bool) {
        match (first_long, second_long) {
            (false, false) => self.short_short += 1,
            (false, true) => self.short_long += 1,
            (true, false) => self.long_short += 1,
            (true, true) => self.long_long += 1,
        }
    }

    fn merge(mut self, other: CellCounts) -> CellCounts {
        self.short_short += other.short_short;
        self.short_long += other.short_long;
        self.long_short += other.long_short;
        self.long_long += other.long_long;
        self
    }

    /// `P[both short]`.
    pub fn beta(&self) -> f64 {
        self.short_short as f64 / self.total() as f64
    }

    /// `P[d > λ]` pooled over both edges of the pair.
    pub fn eta(&self) -> f64 {
        let long = 2 * self.long_long + self.short_long + self.long_short;
        long as f64 / (2 * self.total()) as f64
    }
}

/// Cell counts for the collinear and perpendicular pairs of the motif.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifCounts {
    pub collinear: CellCounts,
    pub perpendicular: CellCounts,
    /// Long edges among all three motif edges.
    pub long_edges: u64,
    pub samples: u64,
}

impl MotifCounts {
    pub fn cells(&self, orientation: Orientation) -> CellCounts {
        match orientation {
            Orientation::Collinear => self.collinear,
            Orientation::Perpendicular => self.perpendicular,
        }
    }

    /// `η` pooled over the three motif edges.
    pub fn eta(&self) -> f64 {
        self.long_edges as f64 / (3 * self.samples) as f64
    }
}

/// Monte Carlo over displaced four-node motifs.
pub fn motif_counts(sigma: f64, lambda: f64, n_samples: usize, seed: u64) -> Result<MotifCounts> {
    if !(sigma >= 0.0) {
        return domain(format!("sigma must be nonnegative, got {sigma}"));
    }
    if !(lambda >= 0.0) {
        return config(format!("lambda must be nonnegative, got {lambda}"));
    }
    if n_samples == 0 {
        return config("n_samples must be positive");
    }
    const BASE: [[f64; 2]; 4] = [[0.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let chunks = n_samples.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, &[purpose::MOTIF, c as u64]);
            let n = CHUNK.min(n_samples - c * CHUNK);
            let mut out = MotifCounts::default();
            for _ in 0..n {
                let mut pos = BASE;
                for p in &mut pos {
                    let g = gaussian_pair(&mut rng);
                    p[0] += sigma * g[0];
                    p[1] += sigma * g[1];
                }
                let dist = |i: usize, j: usize| (pos[i][0] - pos[j][0]).hypot(pos[i][1] - pos[j][1]);
                let l10 = dist(1, 0) >= lambda;
                let l02 = dist(0, 2) >= lambda;
                let l03 = dist(0, 3) >= lambda;
                out.collinear.add(l10, l02);
                out.perpendicular.add(l10, l03);
                out.long_edges += u64::from(l10) + u64::from(l02) + u64::from(l03);
                out.samples += 1;
            }
            out
        })
        .reduce(MotifCounts::default, |a, b| MotifCounts {
            collinear: a.collinear.merge(b.collinear),
            perpendicular: a.perpendicular.merge(b.perpendicular),
            long_edges: a.long_edges + b.long_edges,
            samples: a.samples + b.samples,
        });
    Ok(counts)
}

/// `β = P[both edges of the pair shorter than λ]` on the motif.
pub fn beta(sigma: f64, lambda: f64, orientation: Orientation, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples < MIN_BETA_SAMPLES {
        return config(format!("beta needs at least {MIN_BETA_SAMPLES} samples, got {n_samples}"));
    }
    Ok(motif_counts(sigma, lambda, n_samples, seed)?.cells(orientation).beta())
}

/// `ρ = (β − (1−η)²)/(η(1−η))`.
pub fn pearson(eta: f64, beta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return domain(format!("pearson coefficient undefined for eta = {eta}"));
    }
    if !(0.0..=1.0).contains(&beta) {
        return domain(format!("beta = {beta} outside [0, 1]"));
    }
    Ok((beta - (1.0 - eta) * (1.0 - eta)) / (eta * (1.0 - eta)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationStats {
    pub sigma: f64,
    pub lambda: f64,
    pub eta: f64,
    pub beta_par: f64,
    pub beta_perp: f64,
    pub rho_par: f64,
    pub rho_perp: f64,
    pub n_samples: usize,
}

/// Motif estimates of `η`, `β∥`, `β⊥` and both Pearson coefficients. `η` is
/// pooled over the three motif edges of the same samples. When no sampled
/// edge is short, or none is long, `ρ` is undefined and reported as NaN.
pub fn correlation_stats(sigma: f64, lambda: f64, n_samples: usize, seed: u64) -> Result<CorrelationStats> {
    if n_samples < MIN_BETA_SAMPLES {
        return config(format!("correlations need at least {MIN_BETA_SAMPLES} samples, got {n_samples}"));
    }
    let counts = motif_counts(sigma, lambda, n_samples, seed)?;
    let eta = counts.eta();
    let beta_par = counts.collinear.beta();
    let beta_perp = counts.perpendicular.beta();
    let rho = |beta| if eta > 0.0 && eta < 1.0 { pearson(eta, beta) } else { Ok(f64::NAN) };
    Ok(CorrelationStats {
        sigma,
        lambda,
        eta,
        beta_par,
        beta_perp,
        rho_par: rho(beta_par)?,
        rho_perp: rho(beta_perp)?,
        n_samples,
    })
}

/// Whole-lattice estimate of `η`, `β` and `ρ` from a two-valued assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeCorrelation {
    pub eta: f64,
    pub beta: f64,
    pub rho: f64,
    pub n_pairs: usize,
}

/// `η̂` is the fraction of edges carrying the larger frequency and `β̂` the
/// fraction of adjacent pairs where both carry the smaller one. The
/// coefficient does not depend on which label is called long.
pub fn lattice_correlation(
    lattice: &PerturbedLattice,
    assignment: &FrequencyAssignment,
    orientation: Orientation,
) -> Result<LatticeCorrelation> {
    if assignment.len() != lattice.edge_count() {
        return config("assignment does not match the lattice");
    }
    let Some((lo, hi)) = assignment.two_values() else {
        return domain("lattice correlation needs an assignment with exactly two values");
    };
    let pairs = lattice.adjacent_edge_pairs(orientation)?;
    let om = &assignment.omegas;
    let eta = om.iter().filter(|&&w| w == hi).count() as f64 / om.len() as f64;
    let both_lo = pairs.iter().filter(|&&(a, b)| om[a as usize] == lo && om[b as usize] == lo).count();
    let beta = both_lo as f64 / pairs.len() as f64;
    Ok(LatticeCorrelation { eta, beta, rho: pearson(eta, beta)?, n_pairs: pairs.len() })
}

pub fn pearson_from_assignment(
    lattice: &PerturbedLattice,
    assignment: &FrequencyAssignment,
    orientation: Orientation,
) -> Result<f64> {
    Ok(lattice_correlation(lattice, assignment, orientation)?.rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::integrate_to_infinity;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rice_basics() {
        assert_eq!(rice_pdf(0.0, 1.0, 0.1).unwrap(), 0.0);
        assert!(rice_pdf(1.0, 1.0, 0.0).is_err());
        assert!(rice_pdf(1.0, 1.0, -1.0).is_err());
        for &(nu, sigma) in &[(1.0, 0.05), (1.0, 0.1), (1.0, 0.5), (0.0, 0.3), (3.0, 1.0)] {
            let total = integrate_to_infinity(|x| rice_pdf(x, nu, sigma).unwrap(), 0.0, 1e-12).unwrap();
            assert_abs_diff_eq!(total.value, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn rice_zero_nu_is_rayleigh() {
        let s = 0.4f64;
        let s2 = 2.0 * s * s;
        for x in [0.1, 0.5, 1.3] {
            let rayleigh = x / s2 * (-x * x / (2.0 * s2)).exp();
            assert_abs_diff_eq!(rice_pdf(x, 0.0, s).unwrap(), rayleigh, epsilon = 1e-14);
        }
    }

    #[test]
    fn rice_mode_near_one() {
        let f = |x: f64| rice_pdf(x, 1.0, 0.1).unwrap();
        let (mut a, mut b) = (0.5f64, 1.5f64);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        while b - a > 1e-9 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let mode = 0.5 * (a + b);
        assert!((mode - 1.0).abs() < 0.02);
        // The mode sits where the derivative of the density vanishes.
        let h = 1e-6;
        assert!(f(mode - 1e-3) < f(mode) && f(mode + 1e-3) < f(mode));
        assert!(((f(mode + h) - f(mode - h)) / (2.0 * h)).abs() < 1e-2);
    }

    #[test]
    fn eta_limits_and_methods() {
        let q = |s, l| eta(s, l, EtaMethod::Quadrature { tol: 1e-12 }).unwrap().value;
        assert_eq!(q(0.1, 0.0), 1.0);
        assert!(q(0.1, 10.0) < 1e-12);
        assert!((q(0.1, 1.0) - 0.5).abs() < 0.05);
        assert!(eta(0.0, 1.0, EtaMethod::Quadrature { tol: 1e-12 }).is_err());
        for &(s, l) in &[(0.05, 1.0), (0.2, 0.8), (0.3, 1.2), (0.5, 1.5)] {
            let exact = q(s, l);
            let mc = eta(s, l, EtaMethod::MonteCarlo { n_samples: 200_000, seed: 4 }).unwrap();
            assert!((mc.value - exact).abs() < 3.0 * mc.error.max(1e-4), "s={s} l={l} {exact} {mc:?}");
        }
    }

    #[test]
    fn beta_limits_and_anticorrelation() {
        let n = MIN_BETA_SAMPLES;
        assert_eq!(beta(0.1, 0.0, Orientation::Collinear, n, 1).unwrap(), 0.0);
        assert_eq!(beta(0.1, 1e9, Orientation::Perpendicular, n, 1).unwrap(), 1.0);
        assert!(beta(0.1, 1.0, Orientation::Collinear, n - 1, 1).is_err());
        let st = correlation_stats(0.1, 1.0, 200_000, 9).unwrap();
        assert!(st.beta_par < (1.0 - st.eta).powi(2));
        assert!(st.rho_par < -0.2, "{st:?}");
        assert!(st.rho_perp.abs() < 0.1, "{st:?}");
    }

    #[test]
    fn motif_cells_are_consistent() {
        let c = motif_counts(0.2, 1.0, 50_000, 2).unwrap();
        for cells in [c.collinear, c.perpendicular] {
            assert_eq!(cells.total(), 50_000);
            // Marginal consistency of the shared edge.
            let first_short = cells.short_short + cells.short_long;
            let eta_first = 1.0 - first_short as f64 / 50_000.0;
            assert!(cells.beta() <= 1.0 - eta_first + 1e-15);
            assert!(cells.beta() >= (1.0 - 2.0 * eta_first).max(0.0) - 1e-15);
        }
        assert_eq!(c.collinear.short_short + c.collinear.short_long, c.perpendicular.short_short + c.perpendicular.short_long);
    }

    #[test]
    fn pearson_examples() {
        assert_abs_diff_eq!(pearson(0.3, 0.49).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pearson(0.5, 0.0).unwrap(), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pearson(0.5, 0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert!(pearson(0.0, 0.2).is_err());
        assert!(pearson(1.0, 0.2).is_err());
        // Relabelling: P[both long] = β + 2η − 1 with η → 1 − η.
        let (e, b) = (0.37, 0.3);
        assert_abs_diff_eq!(pearson(e, b).unwrap(), pearson(1.0 - e, b + 2.0 * e - 1.0).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn degenerate_eta_gives_undefined_rho() {
        // σ = 0.05 and λ = 0.5: every sampled distance exceeds λ.
        let c = correlation_stats(0.05, 0.5, MIN_BETA_SAMPLES, 1).unwrap();
        assert_eq!(c.eta, 1.0);
        assert!(c.rho_par.is_nan() && c.rho_perp.is_nan());
        assert!(pearson(1.0, 0.0).is_err());
    }
}
