//! Branching-process mean field for the 4-regular random graph with two
//! edges of each colour per node.
//!
//! `m₁` (`m₂`) is the probability that following an active colour-1
//! (colour-2) edge leads to an infinite cluster. The self-consistency map is
//!
//! ```text
//! m₁ = 1 − (1−φ₁m₁)(1−φ₂m₂)²
//! m₂ = 1 − (1−φ₁m₁)²(1−φ₂m₂)
//! ```
//!
//! and the giant-cluster fraction is `S = 1 − (1−φ₁m₁)²(1−φ₂m₂)²`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::numeric::bisect;
use crate::two_colour::gamma_trajectory;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// Plain iterations between Newton attempts.
const NEWTON_EVERY: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldSolution {
    pub phi1: f64,
    pub phi2: f64,
    pub m1: f64,
    pub m2: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return config(format!("{name} = {x} must lie in [0, 1]"));
    }
    Ok(())
}

fn map(phi1: f64, phi2: f64, m: [f64; 2]) -> [f64; 2] {
    let a = 1.0 - phi1 * m[0];
    let b = 1.0 - phi2 * m[1];
    [1.0 - a * b * b, 1.0 - a * a * b]
}

pub fn giant_fraction(phi1: f64, phi2: f64, m1: f64, m2: f64) -> f64 {
    let a = 1.0 - phi1 * m1;
    let b = 1.0 - phi2 * m2;
    1.0 - a * a * b * b
}

/// One Newton step on `F(m) − m`, or `None` if the system is singular.
fn newton_step(phi1: f64, phi2: f64, m: [f64; 2]) -> Option<[f64; 2]> {
    let a = 1.0 - phi1 * m[0];
    let b = 1.0 - phi2 * m[1];
    let f = map(phi1, phi2, m);
    let g = [f[0] - m[0], f[1] - m[1]];
    // Jacobian of F minus the identity.
    let j11 = phi1 * b * b - 1.0;
    let j12 = 2.0 * phi2 * a * b;
    let j21 = 2.0 * phi1 * a * b;
    let j22 = phi2 * a * a - 1.0;
    let det = j11 * j22 - j12 * j21;
    if det.abs() < 1e-300 || !det.is_finite() {
        return None;
    }
    let d0 = (j22 * g[0] - j12 * g[1]) / det;
    let d1 = (j11 * g[1] - j21 * g[0]) / det;
    Some([(m[0] - d0).max(0.0), (m[1] - d1).max(0.0)])
}

fn is_supersolution(phi1: f64, phi2: f64, m: [f64; 2]) -> bool {
    let f = map(phi1, phi2, m);
    f[0] <= m[0] + 1e-15 && f[1] <= m[1] + 1e-15
}

/// Largest fixed point, reached by iterating downwards from `(1, 1)`.
///
/// Iteration is damped (factor 1, falling back to 1/2 if an update changes
/// direction) and periodically accelerated by a Newton step, which is kept
/// only if it moves downwards and lands on a point the map does not push
/// up. Such points stay above the largest fixed point, so the iteration
/// still converges to it.
pub fn solve_fixed_point(phi1: f64, phi2: f64, tol: f64, max_iter: usize) -> Result<MeanFieldSolution> {
    check_unit("phi1", phi1)?;
    check_unit("phi2", phi2)?;
    if !(tol > 0.0) {
        return config("tol must be positive");
    }
    let mut m = [1.0, 1.0];
    let mut damping = 1.0;
    let mut last_delta = [0.0f64; 2];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let f = map(phi1, phi2, m);
        let delta = [f[0] - m[0], f[1] - m[1]];
        if delta[0] * last_delta[0] < 0.0 || delta[1] * last_delta[1] < 0.0 {
            damping = 0.5;
        }
        last_delta = delta;
        m = [m[0] + damping * delta[0], m[1] + damping * delta[1]];
        let small = delta[0].abs().max(delta[1].abs()) < tol;
        if small || iterations % NEWTON_EVERY == 0 {
            // Near the critical line a tiny update does not mean the
            // iterate is close; the Newton step estimates the distance.
            let accepted = newton_step(phi1, phi2, m)
                .filter(|n| n[0] <= m[0] && n[1] <= m[1] && is_supersolution(phi1, phi2, *n));
            match accepted {
                Some(n) => {
                    let dist = (m[0] - n[0]).max(m[1] - n[1]);
                    m = n;
                    if small && dist < tol {
                        converged = true;
                        break;
                    }
                }
                None if small => {
                    converged = true;
                    break;
                }
                None => {}
            }
        }
    }
    Ok(MeanFieldSolution {
        phi1,
        phi2,
        m1: m[0],
        m2: m[1],
        s: giant_fraction(phi1, phi2, m[0], m[1]),
        iterations,
        converged,
    })
}

/// Largest eigenvalue of the Jacobian of the map at the trivial fixed
/// point.
pub fn jacobian_eigenvalue(phi1: f64, phi2: f64) -> f64 {
    0.5 * (phi1 + phi2 + (phi1 * phi1 + phi2 * phi2 + 14.0 * phi1 * phi2).sqrt())
}

/// `φ₂` on the critical line `Λ(φ₁, φ₂) = 1`, found by bisection.
pub fn critical_line_phi2(phi1: f64) -> Result<f64> {
    check_unit("phi1", phi1)?;
    let g = |phi2: f64| jacobian_eigenvalue(phi1, phi2) - 1.0;
    if g(0.0) > 0.0 || g(1.0) < 0.0 {
        return domain(format!("no critical phi2 in [0, 1] for phi1 = {phi1}"));
    }
    if g(0.0) == 0.0 {
        return Ok(0.0);
    }
    Ok(bisect(g, 0.0, 1.0, 1e-15)?.clamp(0.0, 1.0))
}

/// Fixed point of `m = 1 − (1−pm)³` from `m = 1` and `P_U = 1 − (1−pm)⁴`.
pub fn uniform_reshuffled(p: f64, tol: f64) -> Result<(f64, f64)> {
    check_unit("p", p)?;
    if !(tol > 0.0) {
        return config("tol must be positive");
    }
    let f = |m: f64| 1.0 - (1.0 - p * m).powi(3);
    let mut m = 1.0f64;
    for _ in 0..DEFAULT_MAX_ITER {
        // Newton from above on the concave map never overshoots the
        // largest root; fall back to a plain step when it would.
        let g = f(m) - m;
        let dg = 3.0 * p * (1.0 - p * m).powi(2) - 1.0;
        let mut next = if dg < 0.0 { m - g / dg } else { f(m) };
        if !(next >= 0.0 && next <= m) || f(next) > next + 1e-15 {
            next = f(m);
        }
        let step = (m - next).abs();
        m = next.max(0.0);
        if step < tol {
            break;
        }
    }
    Ok((m, 1.0 - (1.0 - p * m).powi(4)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldPoint {
    pub t: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub p: f64,
    #[serde(rename = "P")]
    pub order: f64,
    /// Uniform solution at the same mean activation `p`.
    pub order_reshuffled: f64,
    pub converged: bool,
}

/// `P(t) = S(φ₁(t), φ₂(t))` along the dynamical curve.
pub fn meanfield_dynamic(omega_ratio: f64, times: &[f64], tol: f64) -> Result<Vec<MeanFieldPoint>> {
    let gamma = gamma_trajectory(omega_ratio, times)?;
    gamma
        .par_iter()
        .map(|g| {
            let sol = solve_fixed_point(g.phi1, g.phi2, tol, DEFAULT_MAX_ITER)?;
            let (_, pu) = uniform_reshuffled(g.p, tol)?;
            Ok(MeanFieldPoint {
                t: g.t,
                phi1: g.phi1,
                phi2: g.phi2,
                p: g.p,
                order: sol.s,
                order_reshuffled: pu,
                converged: sol.converged,
            })
        })
        .collect()
}

/// Solutions on the product grid, row-major in `(φ₁, φ₂)`.
pub fn meanfield_grid(grid: &[f64], tol: f64) -> Result<Vec<MeanFieldSolution>> {
    let n = grid.len();
    (0..n * n)
        .into_par_iter()
        .map(|k| solve_fixed_point(grid[k / n], grid[k % n], tol, DEFAULT_MAX_ITER))
        .collect()
}
