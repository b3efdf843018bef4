//! Execute a resolved config into CSV tables.

use dynperc::disorder;
use dynperc::dynamics::AnalyticCurve;
use dynperc::frequency;
use dynperc::lattice::{self, LatticeSpec};
use dynperc::mean_field;
use dynperc::percolation::{self, Refinement, TrajectorySpec};
use dynperc::rng;
use dynperc::two_colour::{self, Sampling, SweepSpec};
use dynperc::Error;

use crate::config::*;
use crate::output::{real, Table};
use crate::CliError;

pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let budget = cfg.budget as u128;
    let seed = cfg.master_seed;
    match &cfg.params {
        Params::Simulate(p) => simulate(p, seed, budget),
        Params::TwoColour(p) => two_colour_run(p, seed, budget),
        Params::Meanfield(p) => meanfield(p),
        Params::Correlations(p) => correlations(p, seed, budget),
        Params::AnalyticP(p) => analytic(p),
        Params::LatticeDump(p) => lattice_dump(p, seed),
    }
}

fn need<T: Copy>(value: Option<T>, key: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::config(format!("missing required key: {key}")))
}

fn simulate(p: &SimulateParams, seed: u64, budget: u128) -> Result<Vec<Table>, CliError> {
    let spec = LatticeSpec::new(p.topology, p.side, p.boundary)?;
    match p.mode {
        SimulateMode::Static => {
            if p.p_points < 2 {
                return Err(CliError::config("p_points must be at least 2"));
            }
            let required = spec.node_count() as u128 * p.n_samples as u128;
            if required > budget {
                return Err(Error::Budget { required, budget }.into());
            }
            let grid: Vec<f64> = (0..p.p_points).map(|i| i as f64 / (p.p_points - 1) as f64).collect();
            let curve = percolation::static_percolation_curve(spec, &grid, p.n_samples, seed)?;
            let mut t = Table::new("static_curve.csv", &["p", "P", "stderr"]);
            for pt in curve {
                t.push_reals(&[pt.p, pt.order_param, pt.stderr]);
            }
            Ok(vec![t])
        }
        SimulateMode::Trajectory => {
            let model = p.model.clone().ok_or_else(|| CliError::config("missing required key: model"))?;
            let times = p.times.as_ref().ok_or_else(|| CliError::config("missing required key: times"))?.values()?;
            let mut ts = TrajectorySpec::new(spec, model, times);
            ts.sigma = p.sigma;
            ts.reshuffle = p.reshuffle;
            ts.n_disorder = p.n_disorder;
            ts.n_activation = p.n_activation;
            ts.coupled = p.coupled;
            ts.seed = seed;
            ts.budget = budget;
            ts.refine = match (p.refine_target_stderr, p.refine_max_disorder) {
                (None, None) => None,
                (Some(target_stderr), Some(max_disorder)) => Some(Refinement { target_stderr, max_disorder }),
                _ => {
                    return Err(CliError::config(
                        "refine_target_stderr and refine_max_disorder must be given together",
                    ))
                }
            };
            let rec = percolation::run_trajectory(&ts)?;
            let mut t = Table::new("trajectory.csv", &["t", "p_hat", "P_hat", "stderr_P"]);
            for k in 0..rec.len() {
                t.push_reals(&[rec.times[k], rec.p_hat[k], rec.order_param[k], rec.order_stderr[k]]);
            }
            Ok(vec![t])
        }
    }
}

fn sampling(p: &TwoColourParams) -> Sampling {
    Sampling {
        min_samples: p.n_samples,
        max_samples: p.max_samples.unwrap_or(p.n_samples),
        target_stderr: p.target_stderr,
    }
}

fn two_colour_run(p: &TwoColourParams, seed: u64, budget: u128) -> Result<Vec<Table>, CliError> {
    match p.mode {
        TwoColourMode::Sweep => {
            let spec = SweepSpec {
                side: p.side,
                grid_step: p.grid_step,
                sampling: sampling(p),
                constrained: p.constrained,
                seed,
                budget,
            };
            let d = two_colour::sweep_phase_diagram(&spec)?;
            let mut t = Table::new("phase_diagram.csv", &["phi1", "phi2", "S", "stderr"]);
            for (a, b, s, e) in d.rows() {
                t.push_reals(&[a, b, s, e]);
            }
            Ok(vec![t])
        }
        TwoColourMode::Dynamic => {
            let ratio = need(p.omega_ratio, "omega_ratio")?;
            let times = p.times.clone().unwrap_or_default().values()?;
            let (gamma, rec) =
                two_colour::dynamic_two_colour(p.side, ratio, &times, sampling(p), p.constrained, seed, budget)?;
            let mut t = Table::new("two_colour_dynamic.csv", &["t", "phi1", "phi2", "p", "P", "stderr_P"]);
            for (g, k) in gamma.iter().zip(0..) {
                t.push_reals(&[g.t, g.phi1, g.phi2, g.p, rec.order_param[k], rec.order_stderr[k]]);
            }
            Ok(vec![t])
        }
    }
}

fn converged(sol: &mean_field::MeanFieldSolution) -> Result<(), CliError> {
    if sol.converged {
        Ok(())
    } else {
        Err(Error::NonConvergence(format!(
            "mean-field iteration did not converge at ({}, {}) after {} iterations",
            sol.phi1, sol.phi2, sol.iterations
        ))
        .into())
    }
}

const MEANFIELD_COLUMNS: [&str; 8] = ["phi1", "phi2", "S", "stderr", "m1", "m2", "iterations", "converged"];

fn meanfield_row(t: &mut Table, s: &mean_field::MeanFieldSolution) {
    t.push(vec![
        real(s.phi1),
        real(s.phi2),
        real(s.s),
        real(0.0),
        real(s.m1),
        real(s.m2),
        s.iterations.to_string(),
        s.converged.to_string(),
    ]);
}

fn meanfield(p: &MeanfieldParams) -> Result<Vec<Table>, CliError> {
    if !(p.tol > 0.0) {
        return Err(CliError::config("tol must be positive"));
    }
    match p.mode {
        MeanfieldMode::Point => {
            let sol = mean_field::solve_fixed_point(need(p.phi1, "phi1")?, need(p.phi2, "phi2")?, p.tol, p.max_iter)?;
            converged(&sol)?;
            let mut t = Table::new("meanfield_point.csv", &MEANFIELD_COLUMNS);
            meanfield_row(&mut t, &sol);
            Ok(vec![t])
        }
        MeanfieldMode::Grid => {
            let grid = two_colour::unit_grid(p.grid_step)?;
            let n = grid.len();
            let sols: Vec<_> = {
                use rayon::prelude::*;
                (0..n * n)
                    .into_par_iter()
                    .map(|k| mean_field::solve_fixed_point(grid[k / n], grid[k % n], p.tol, p.max_iter))
                    .collect::<Result<_, _>>()?
            };
            let mut t = Table::new("meanfield_grid.csv", &MEANFIELD_COLUMNS);
            for s in &sols {
                converged(s)?;
                meanfield_row(&mut t, s);
            }
            Ok(vec![t])
        }
        MeanfieldMode::CriticalLine => {
            if p.points < 2 {
                return Err(CliError::config("points must be at least 2"));
            }
            let mut t = Table::new("critical_line.csv", &["phi1", "phi2"]);
            for i in 0..p.points {
                let phi1 = i as f64 / (p.points - 1) as f64;
                t.push_reals(&[phi1, mean_field::critical_line_phi2(phi1)?]);
            }
            Ok(vec![t])
        }
        MeanfieldMode::Dynamic => {
            let ratio = need(p.omega_ratio, "omega_ratio")?;
            let times = p.times.clone().unwrap_or_default().values()?;
            let pts = mean_field::meanfield_dynamic(ratio, &times, p.tol)?;
            let mut t =
                Table::new("meanfield_dynamic.csv", &["t", "phi1", "phi2", "p", "P", "stderr_P", "P_reshuffled"]);
            for q in &pts {
                if !q.converged {
                    return Err(Error::NonConvergence(format!("mean-field iteration did not converge at t = {}", q.t)).into());
                }
                t.push_reals(&[q.t, q.phi1, q.phi2, q.p, q.order, 0.0, q.order_reshuffled]);
            }
            Ok(vec![t])
        }
    }
}

fn correlations(p: &CorrelationsParams, seed: u64, budget: u128) -> Result<Vec<Table>, CliError> {
    let sigmas = p.sigma.values();
    let lambdas = p.lambda.values();
    let required = 4 * p.n_samples as u128 * (sigmas.len() * lambdas.len()) as u128;
    if required > budget {
        return Err(Error::Budget { required, budget }.into());
    }
    let mut t = Table::new(
        "correlations.csv",
        &["sigma", "lambda", "eta", "beta_par", "beta_perp", "rho_par", "rho_perp", "n_samples"],
    );
    for (i, &sigma) in sigmas.iter().enumerate() {
        for (j, &lambda) in lambdas.iter().enumerate() {
            let cell_seed = rng::derive_seed(seed, &[i as u64, j as u64]);
            let c = disorder::correlation_stats(sigma, lambda, p.n_samples, cell_seed)?;
            let mut row: Vec<String> =
                [c.sigma, c.lambda, c.eta, c.beta_par, c.beta_perp, c.rho_par, c.rho_perp].iter().map(|&x| real(x)).collect();
            row.push(c.n_samples.to_string());
            t.push(row);
        }
    }
    Ok(vec![t])
}

fn analytic(p: &AnalyticParams) -> Result<Vec<Table>, CliError> {
    let curve = match p.kind {
        AnalyticKind::Gaussian => {
            AnalyticCurve::Gaussian { omega: need(p.omega, "omega")?, sigma: need(p.sigma, "sigma")?, k_max: p.k_max }
        }
        AnalyticKind::GaussianAsymptotic => {
            AnalyticCurve::GaussianAsymptotic { omega: need(p.omega, "omega")?, sigma: need(p.sigma, "sigma")? }
        }
        AnalyticKind::Bernoulli => AnalyticCurve::Bernoulli {
            eta: need(p.eta, "eta")?,
            omega1: need(p.omega1, "omega1")?,
            omega2: need(p.omega2, "omega2")?,
        },
    };
    curve.validate()?;
    let times = p.times.clone().unwrap_or_default().values()?;
    let mut t = Table::new("analytic_p.csv", &["t", "p"]);
    for &x in &times {
        t.push_reals(&[x, curve.eval(x)]);
    }
    Ok(vec![t])
}

fn lattice_dump(p: &LatticeDumpParams, seed: u64) -> Result<Vec<Table>, CliError> {
    let spec = LatticeSpec::new(p.topology, p.side, p.boundary)?;
    let lat = lattice::perturb(&lattice::generate_lattice(spec)?, p.sigma, seed)?;
    let mut nodes = Table::new("nodes.csv", &["node", "x", "y"]);
    for (i, pos) in lat.positions.iter().enumerate() {
        nodes.push(vec![i.to_string(), real(pos[0]), real(pos[1])]);
    }
    let mut edges = Table::new("edges.csv", &["edge", "a", "b", "length"]);
    for (e, (&(a, b), &len)) in lat.edges.iter().zip(&lat.lengths).enumerate() {
        edges.push(vec![e.to_string(), a.to_string(), b.to_string(), real(len)]);
    }
    let mut tables = vec![nodes, edges];
    if let Some(model) = &p.model {
        let assignment = frequency::assign(&lat, model, seed)?;
        let mut f = Table::new("frequencies.csv", &["edge", "omega"]);
        for (e, &w) in assignment.omegas.iter().enumerate() {
            f.push(vec![e.to_string(), real(w)]);
        }
        tables.push(f);
    }
    Ok(tables)
}
