//! Cluster measurement against breadth-first search, and statistical
//! properties of the activation and static percolation samplers.

use std::collections::VecDeque;

use dynperc::frequency::{self, FrequencyModel};
use dynperc::lattice::{self, Boundary, LatticeSpec, Topology};
use dynperc::percolation::{self, ActivationSample};
use dynperc::rng;
use proptest::prelude::*;

fn bfs_largest(lat: &dynperc::PerturbedLattice, active: &ActivationSample) -> usize {
    let n = lat.node_count();
    let mut adj = vec![Vec::new(); n];
    for e in active.active.iter_ones() {
        let (a, b) = lat.edges[e];
        adj[a as usize].push(b as usize);
        adj[b as usize].push(a as usize);
    }
    let mut seen = vec![false; n];
    let mut best = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        best = best.max(size);
    }
    best
}

fn topology() -> impl Strategy<Value = Topology> {
    prop_oneof![Just(Topology::Square), Just(Topology::Triangular)]
}

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::Periodic), Just(Boundary::Open)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn union_find_matches_bfs(
        topo in topology(),
        bound in boundary(),
        side in 2usize..24,
        omega in 0.1f64..3.0,
        t in 0.0f64..10.0,
        seed in any::<u64>(),
    ) {
        let spec = LatticeSpec::new(topo, side, bound).unwrap();
        let lat = lattice::generate_lattice(spec).unwrap();
        let model = FrequencyModel::GaussianIid { mean: omega, std: 0.5 };
        let assignment = frequency::assign(&lat, &model, seed).unwrap();
        let sample = percolation::sample_activation(&lat, &assignment, t, seed).unwrap();
        let uf = percolation::largest_component_fraction(&lat, &sample).unwrap();
        let bfs = bfs_largest(&lat, &sample) as f64 / lat.node_count() as f64;
        prop_assert_eq!(uf, bfs);
    }

    #[test]
    fn derived_streams_are_reproducible(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        use rand::RngCore;
        prop_assert_eq!(rng::derive_seed(seed, &[a, b]), rng::derive_seed(seed, &[a, b]));
        prop_assert_eq!(rng::stream(seed, &[a, b]).next_u64(), rng::stream(seed, &[a, b]).next_u64());
        if a != b {
            prop_assert_ne!(rng::derive_seed(seed, &[a, b]), rng::derive_seed(seed, &[b, a]));
        }
    }
}

#[test]
fn active_fraction_is_binomially_concentrated() {
    // Uniform frequency: every edge activates with φ = 1 − |cos ωt|, so the
    // active count is Binomial(E, φ).
    let lat = lattice::generate_lattice(LatticeSpec::square(200).unwrap()).unwrap();
    let assignment = frequency::assign(&lat, &FrequencyModel::Uniform { omega: 1.0 }, 0).unwrap();
    let e = lat.edge_count() as f64;
    for (k, t) in [0.3, 0.9, 1.2, 2.0, 5.0].into_iter().enumerate() {
        let phi = 1.0 - f64::cos(t).abs();
        let sample = percolation::sample_activation(&lat, &assignment, t, k as u64).unwrap();
        let z = (sample.active_fraction() - phi) / (phi * (1.0 - phi) / e).sqrt();
        assert!(z.abs() < 4.5, "t={t}: z={z}");
    }
}

#[test]
fn static_curve_is_monotone_and_bracketed() {
    let grid: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
    let curve = percolation::static_percolation_curve(LatticeSpec::square(64).unwrap(), &grid, 50, 4).unwrap();
    assert_eq!(curve[0].order_param, 1.0 / (64.0 * 64.0));
    assert_eq!(curve[40].order_param, 1.0);
    for w in curve.windows(2) {
        assert!(w[1].order_param >= w[0].order_param, "{:?}", w);
    }
}

#[test]
fn subcritical_square_lattice_has_no_giant_component() {
    let curve = percolation::static_percolation_curve(LatticeSpec::square(256).unwrap(), &[0.45, 0.55], 40, 8).unwrap();
    assert!(curve[0].order_param < 0.02, "P(0.45) = {}", curve[0].order_param);
    assert!(curve[1].order_param > 0.3, "P(0.55) = {}", curve[1].order_param);
}

#[test]
fn coupled_trajectory_is_ordered_by_activation() {
    // With coupled uniforms and a uniform frequency, the active set at a
    // larger φ contains the one at a smaller φ, so P̂ is monotone in φ.
    let spec = LatticeSpec::square(48).unwrap();
    let times: Vec<f64> = (0..=20).map(|i| i as f64 * std::f64::consts::FRAC_PI_2 / 20.0).collect();
    let mut ts = percolation::TrajectorySpec::new(spec, FrequencyModel::Uniform { omega: 1.0 }, times);
    ts.n_disorder = 1;
    ts.n_activation = 5;
    ts.coupled = true;
    let rec = percolation::run_trajectory(&ts).unwrap();
    for k in 1..rec.len() {
        assert!(rec.order_param[k] >= rec.order_param[k - 1]);
        assert!(rec.p_hat[k] >= rec.p_hat[k - 1]);
    }
}
