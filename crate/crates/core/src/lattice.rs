//! Square and triangular lattices with optional Gaussian position noise.
//!
//! Node `(i, j)` has index `j·L + i`. Every node owns its forward edges
//! (`+x`, `+y`, and on the triangular lattice `(-1, +1)`), listed in node
//! order, so edge indices are stable for a given [`LatticeSpec`]. Perturbing
//! a lattice moves nodes but never rewires it.
//!
//! Under periodic boundaries an edge's length is measured from the
//! unperturbed nearest-neighbour offset plus the displacement difference of
//! its endpoints, which keeps wrap-around edges short.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::rng::{self, purpose};
use crate::stats::Histogram;

const NONE: u32 = u32::MAX;
const SQRT3_2: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Square,
    Triangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub topology: Topology,
    pub side: usize,
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(topology: Topology, side: usize, boundary: Boundary) -> Result<Self> {
        let spec = LatticeSpec { topology, side, boundary };
        spec.validate()?;
        Ok(spec)
    }

    pub fn square(side: usize) -> Result<Self> {
        Self::new(Topology::Square, side, Boundary::Periodic)
    }

    pub fn triangular(side: usize) -> Result<Self> {
        Self::new(Topology::Triangular, side, Boundary::Periodic)
    }

    pub fn validate(&self) -> Result<()> {
        if self.side < 2 {
            return config(format!("lattice side must be at least 2, got {}", self.side));
        }
        // Node and edge indices are 32-bit.
        if (self.side as u128).pow(2) * 3 >= u32::MAX as u128 {
            return config(format!("lattice side {} is too large", self.side));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.side * self.side
    }

    pub fn edge_count(&self) -> usize {
        let l = self.side;
        match (self.topology, self.boundary) {
            (Topology::Square, Boundary::Periodic) => 2 * l * l,
            (Topology::Square, Boundary::Open) => 2 * l * (l - 1),
            (Topology::Triangular, Boundary::Periodic) => 3 * l * l,
            (Topology::Triangular, Boundary::Open) => 3 * l * l - 4 * l + 1,
        }
    }

    fn forward_offsets(&self) -> &'static [(isize, isize)] {
        match self.topology {
            Topology::Square => &[(1, 0), (0, 1)],
            Topology::Triangular => &[(1, 0), (0, 1), (-1, 1)],
        }
    }

    /// Unperturbed position of node `(i, j)`.
    pub fn base_position(&self, node: usize) -> [f64; 2] {
        let (i, j) = ((node % self.side) as f64, (node / self.side) as f64);
        match self.topology {
            Topology::Square => [i, j],
            Topology::Triangular => [i + 0.5 * j, SQRT3_2 * j],
        }
    }

    fn offset_vector(&self, (di, dj): (isize, isize)) -> [f64; 2] {
        let (di, dj) = (di as f64, dj as f64);
        match self.topology {
            Topology::Square => [di, dj],
            Topology::Triangular => [di + 0.5 * dj, SQRT3_2 * dj],
        }
    }

    /// Node at grid offset `(di, dj)` from `node`, if it exists.
    pub fn neighbor(&self, node: usize, di: isize, dj: isize) -> Option<usize> {
        let l = self.side as isize;
        let (i, j) = ((node % self.side) as isize, (node / self.side) as isize);
        let (mut ni, mut nj) = (i + di, j + dj);
        match self.boundary {
            Boundary::Periodic => {
                ni = ni.rem_euclid(l);
                nj = nj.rem_euclid(l);
            }
            Boundary::Open => {
                if ni < 0 || ni >= l || nj < 0 || nj >= l {
                    return None;
                }
            }
        }
        Some((nj * l + ni) as usize)
    }
}

/// Which nearest-neighbour offset class an edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeDirection {
    /// Offset `(1, 0)`.
    Horizontal,
    /// Offset `(0, 1)`.
    Vertical,
    /// Offset `(-1, 1)`, triangular only.
    Diagonal,
}

/// Relative orientation of two edges sharing a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Collinear,
    Perpendicular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedLattice {
    pub spec: LatticeSpec,
    pub positions: Vec<[f64; 2]>,
    /// Endpoints `(a, b)` with `a < b`.
    pub edges: Vec<(u32, u32)>,
    pub lengths: Vec<f64>,
    pub sigma: f64,
    pub seed: u64,
    directions: Vec<EdgeDirection>,
    /// Unperturbed offset from `a` to `b` for each edge.
    offsets: Vec<[f64; 2]>,
    /// Forward edges owned by each node, `NONE` where absent.
    forward: Vec<[u32; 3]>,
}

/// Build the unperturbed lattice.
pub fn generate_lattice(spec: LatticeSpec) -> Result<PerturbedLattice> {
    spec.validate()?;
    let n = spec.node_count();
    let positions: Vec<[f64; 2]> = (0..n).map(|v| spec.base_position(v)).collect();
    let mut edges = Vec::with_capacity(spec.edge_count());
    let mut directions = Vec::with_capacity(spec.edge_count());
    let mut offsets = Vec::with_capacity(spec.edge_count());
    let mut forward = vec![[NONE; 3]; n];
    let dirs = [EdgeDirection::Horizontal, EdgeDirection::Vertical, EdgeDirection::Diagonal];
    for v in 0..n {
        for (slot, &delta) in spec.forward_offsets().iter().enumerate() {
            let Some(w) = spec.neighbor(v, delta.0, delta.1) else {
                continue;
            };
            let off = spec.offset_vector(delta);
            forward[v][slot] = edges.len() as u32;
            if v < w {
                edges.push((v as u32, w as u32));
                offsets.push(off);
            } else {
                edges.push((w as u32, v as u32));
                offsets.push([-off[0], -off[1]]);
            }
            directions.push(dirs[slot]);
        }
    }
    debug_assert_eq!(edges.len(), spec.edge_count());
    let lengths = vec![1.0; edges.len()];
    Ok(PerturbedLattice {
        spec,
        positions,
        edges,
        lengths,
        sigma: 0.0,
        seed: 0,
        directions,
        offsets,
        forward,
    })
}

/// Displace every node by independent `N(0, σ²)` noise in x and y and
/// recompute edge lengths. Node `v` draws its `(δx, δy)` pair in index order
/// from the `(seed, PERTURB)` stream.
pub fn perturb(lattice: &PerturbedLattice, sigma: f64, seed: u64) -> Result<PerturbedLattice> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return config(format!("displacement sigma must be a nonnegative number, got {sigma}"));
    }
    if lattice.sigma != 0.0 {
        return config("perturb expects an unperturbed lattice");
    }
    let mut out = lattice.clone();
    out.sigma = sigma;
    out.seed = seed;
    if sigma == 0.0 {
        return Ok(out);
    }
    let mut rng = rng::stream(seed, &[purpose::PERTURB]);
    for (v, pos) in out.positions.iter_mut().enumerate() {
        let base = lattice.spec.base_position(v);
        let dx: f64 = StandardNormal.sample(&mut rng);
        let dy: f64 = StandardNormal.sample(&mut rng);
        *pos = [base[0] + sigma * dx, base[1] + sigma * dy];
    }
    for e in 0..out.edges.len() {
        out.lengths[e] = out.displaced_length(e);
    }
    Ok(out)
}

impl PerturbedLattice {
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn direction(&self, edge: usize) -> EdgeDirection {
        self.directions[edge]
    }

    /// Displacement of `node` from its lattice site.
    pub fn displacement(&self, node: usize) -> [f64; 2] {
        let base = self.spec.base_position(node);
        let p = self.positions[node];
        [p[0] - base[0], p[1] - base[1]]
    }

    fn displaced_length(&self, edge: usize) -> f64 {
        let (a, b) = self.edges[edge];
        let da = self.displacement(a as usize);
        let db = self.displacement(b as usize);
        let off = self.offsets[edge];
        (off[0] + db[0] - da[0]).hypot(off[1] + db[1] - da[1])
    }

    /// Edge joining `node` to its neighbour at grid offset `(di, dj)`, where
    /// the offset is one of the lattice's nearest-neighbour offsets or its
    /// negation.
    pub fn edge_towards(&self, node: usize, di: isize, dj: isize) -> Option<usize> {
        let slots = self.spec.forward_offsets();
        if let Some(slot) = slots.iter().position(|&o| o == (di, dj)) {
            let e = self.forward[node][slot];
            return (e != NONE).then_some(e as usize);
        }
        let slot = slots.iter().position(|&o| o == (-di, -dj))?;
        let w = self.spec.neighbor(node, di, dj)?;
        let e = self.forward[w][slot];
        (e != NONE).then_some(e as usize)
    }

    /// All pairs of square-lattice edges meeting at a common node with the
    /// given relative orientation. Collinear pairs are `(−x, +x)` and
    /// `(−y, +y)` around each centre node; perpendicular pairs are the four
    /// corners `(±x, ±y)`. The first element of every pair is the x-edge
    /// (or the `−` edge for collinear pairs).
    pub fn adjacent_edge_pairs(&self, orientation: Orientation) -> Result<Vec<(u32, u32)>> {
        if self.spec.topology != Topology::Square {
            return config("adjacent edge pairs are defined for the square lattice only");
        }
        let mut pairs = Vec::new();
        for v in 0..self.node_count() {
            let e = |di, dj| self.edge_towards(v, di, dj);
            match orientation {
                Orientation::Collinear => {
                    for (a, b) in [(e(-1, 0), e(1, 0)), (e(0, -1), e(0, 1))] {
                        if let (Some(a), Some(b)) = (a, b) {
                            pairs.push((a as u32, b as u32));
                        }
                    }
                }
                Orientation::Perpendicular => {
                    for dx in [1, -1] {
                        for dy in [1, -1] {
                            if let (Some(a), Some(b)) = (e(dx, 0), e(0, dy)) {
                                pairs.push((a as u32, b as u32));
                            }
                        }
                    }
                }
            }
        }
        Ok(pairs)
    }
}

/// Histogram of edge lengths over their observed range.
pub fn edge_length_histogram(lattice: &PerturbedLattice, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return config("histogram needs at least one bin");
    }
    Ok(Histogram::from_values(&lattice.lengths, bins))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(l: usize, boundary: Boundary) -> PerturbedLattice {
        generate_lattice(LatticeSpec::new(Topology::Square, l, boundary).unwrap()).unwrap()
    }

    #[test]
    fn periodic_square_counts() {
        let lat = square(2, Boundary::Periodic);
        assert_eq!(lat.node_count(), 4);
        assert_eq!(lat.edge_count(), 8);
        assert!(lat.lengths.iter().all(|&d| d == 1.0));
    }

    #[test]
    fn triangular_counts() {
        let lat = generate_lattice(LatticeSpec::triangular(3).unwrap()).unwrap();
        assert_eq!(lat.edge_count(), 27);
        let open = generate_lattice(
            LatticeSpec::new(Topology::Triangular, 4, Boundary::Open).unwrap(),
        )
        .unwrap();
        assert_eq!(open.edge_count(), 3 * 16 - 16 + 1);
    }

    #[test]
    fn open_square_counts() {
        let lat = square(3, Boundary::Open);
        assert_eq!(lat.edge_count(), 12);
        assert!(lat.edges.iter().all(|&(a, b)| a < b));
    }

    #[test]
    fn invalid_side_rejected() {
        assert!(LatticeSpec::square(1).is_err());
        let bad = LatticeSpec { topology: Topology::Square, side: 0, boundary: Boundary::Open };
        assert!(generate_lattice(bad).is_err());
    }

    #[test]
    fn negative_sigma_rejected() {
        let lat = square(4, Boundary::Periodic);
        assert!(matches!(perturb(&lat, -0.1, 1), Err(crate::Error::Config(_))));
        assert!(perturb(&lat, f64::NAN, 1).is_err());
    }

    #[test]
    fn double_perturbation_rejected() {
        let lat = square(4, Boundary::Periodic);
        let p = perturb(&lat, 0.1, 1).unwrap();
        assert!(perturb(&p, 0.1, 2).is_err());
    }

    #[test]
    fn zero_sigma_is_identity() {
        let lat = square(5, Boundary::Periodic);
        let p = perturb(&lat, 0.0, 99).unwrap();
        assert_eq!(p.positions, lat.positions);
        assert_eq!(p.lengths, lat.lengths);
        assert_eq!(p.edges, lat.edges);
    }

    #[test]
    fn perturbation_is_deterministic_and_keeps_edges() {
        let lat = square(16, Boundary::Periodic);
        let a = perturb(&lat, 0.1, 7).unwrap();
        let b = perturb(&lat, 0.1, 7).unwrap();
        let c = perturb(&lat, 0.1, 8).unwrap();
        assert_eq!(a.lengths, b.lengths);
        assert_ne!(a.lengths, c.lengths);
        assert_eq!(a.edges, lat.edges);
    }

    #[test]
    fn wraparound_edges_stay_short() {
        let lat = square(8, Boundary::Periodic);
        let p = perturb(&lat, 0.05, 3).unwrap();
        assert!(p.lengths.iter().all(|&d| (d - 1.0).abs() < 0.5));
    }

    #[test]
    fn lengths_match_positions_on_open_lattice() {
        let lat = square(6, Boundary::Open);
        let p = perturb(&lat, 0.2, 11).unwrap();
        for (e, &(a, b)) in p.edges.iter().enumerate() {
            let (pa, pb) = (p.positions[a as usize], p.positions[b as usize]);
            let d = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
            assert!((d - p.lengths[e]).abs() < 1e-12);
        }
    }

    #[test]
    fn edge_towards_is_symmetric() {
        for boundary in [Boundary::Periodic, Boundary::Open] {
            let lat = square(5, boundary);
            for v in 0..lat.node_count() {
                for (di, dj) in [(1, 0), (0, 1), (-1, 0), (0, -1)] {
                    if let Some(e) = lat.edge_towards(v, di, dj) {
                        let w = lat.spec.neighbor(v, di, dj).unwrap();
                        let (a, b) = lat.edges[e];
                        assert_eq!((a.min(b), a.max(b)), ((v.min(w)) as u32, (v.max(w)) as u32));
                        assert_eq!(lat.edge_towards(w, -di, -dj), Some(e));
                    }
                }
            }
        }
    }

    #[test]
    fn pair_counts() {
        let lat = square(6, Boundary::Periodic);
        assert_eq!(lat.adjacent_edge_pairs(Orientation::Collinear).unwrap().len(), 72);
        assert_eq!(lat.adjacent_edge_pairs(Orientation::Perpendicular).unwrap().len(), 144);
        let tri = generate_lattice(LatticeSpec::triangular(4).unwrap()).unwrap();
        assert!(tri.adjacent_edge_pairs(Orientation::Collinear).is_err());
    }

    #[test]
    fn unperturbed_histogram_single_bin() {
        let lat = square(10, Boundary::Periodic);
        for bins in [1, 5, 100] {
            let h = edge_length_histogram(&lat, bins).unwrap();
            assert_eq!(h.total(), lat.edge_count() as u64);
            assert_eq!(h.occupied_bins(), 1);
            assert!((h.lo - 1.0).abs() < 1e-12);
        }
        assert!(edge_length_histogram(&lat, 0).is_err());
    }
}
