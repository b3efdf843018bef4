//! Closed-form single-edge dynamics and ensemble-averaged activation curves.
//!
//! An edge with frequency `ω` evolves as
//! `cos(ωt/2)|00⟩ − i·sin(ωt/2)|11⟩`. Its larger Schmidt coefficient is
//! `(1 + |cos ωt|)/2` and it converts to a singlet with probability
//! `1 − |cos ωt|`. Averaging over a frequency density gives the expected
//! active-edge fraction `p(t) = 1 − E|cos(ωt)|`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numeric;

/// Long-time active fraction for any continuous frequency density.
pub const P_INFINITY: f64 = 1.0 - 2.0 / PI;

/// Default truncation of the Gaussian Fourier series.
pub const DEFAULT_K_MAX: usize = 100;

/// Largest denominator accepted when testing a frequency ratio for
/// rationality.
pub const MAX_PERIOD_DENOMINATOR: u64 = 1_000_000;

/// Relative tolerance for matching a frequency ratio to a continued-fraction
/// convergent.
pub const RATIO_TOLERANCE: f64 = 1e-14;

const NORM_TOLERANCE: f64 = 1e-12;

/// Pure two-qubit state `Σ Ψ_ij |ij⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    amplitudes: [[Complex64; 2]; 2],
}

impl TwoQubitState {
    pub fn new(amplitudes: [[Complex64; 2]; 2]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().flatten().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return domain(format!("state norm is {norm}, expected 1"));
        }
        Ok(TwoQubitState { amplitudes })
    }

    /// State of an edge with frequency `omega` at time `t`, starting from
    /// `|00⟩`.
    pub fn edge_state(omega: f64, t: f64) -> Self {
        let half = 0.5 * omega * t;
        let zero = Complex64::new(0.0, 0.0);
        TwoQubitState {
            amplitudes: [
                [Complex64::new(half.cos(), 0.0), zero],
                [zero, Complex64::new(0.0, -half.sin())],
            ],
        }
    }

    pub fn amplitudes(&self) -> &[[Complex64; 2]; 2] {
        &self.amplitudes
    }

    pub fn determinant(&self) -> Complex64 {
        let a = &self.amplitudes;
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }
}

/// Larger Schmidt coefficient, `(1 + √(1 − 4|det Ψ|²))/2 ∈ [1/2, 1]`.
pub fn schmidt_lambda(state: &TwoQubitState) -> f64 {
    let det2 = state.determinant().norm_sqr();
    0.5 * (1.0 + (1.0 - 4.0 * det2).max(0.0).sqrt())
}

/// Optimal singlet-conversion probability from the Schmidt coefficient.
pub fn conversion_from_lambda(lambda: f64) -> f64 {
    (2.0 * (1.0 - lambda)).min(1.0)
}

/// `1 − |cos(ωt)|`.
#[inline]
pub fn conversion_probability(omega: f64, t: f64) -> f64 {
    1.0 - (omega * t).cos().abs()
}

/// Expected active fraction for two-point frequencies: `Ω₁` with
/// probability `eta`, otherwise `Ω₂`.
pub fn p_bernoulli(t: f64, eta: f64, omega1: f64, omega2: f64) -> f64 {
    1.0 - eta * (omega1 * t).cos().abs() - (1.0 - eta) * (omega2 * t).cos().abs()
}

/// Fourier series of `p(t)` for Gaussian frequencies `N(Ω, σ²)`, truncated
/// after `k_max` terms:
/// `1 − 2/π + (4/π) Σ (−1)^k/(4k²−1) cos(2Ωkt) exp(−2σ²t²k²)`.
pub fn p_gaussian(t: f64, omega: f64, sigma: f64, k_max: usize) -> f64 {
    let damping = 2.0 * sigma * sigma * t * t;
    let mut sum = 0.0;
    for k in 1..=k_max.max(1) {
        let kf = k as f64;
        let envelope = (-damping * kf * kf).exp();
        let coeff = 1.0 / (4.0 * kf * kf - 1.0);
        if envelope * coeff < 1e-18 {
            break;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * coeff * (2.0 * omega * kf * t).cos() * envelope;
    }
    P_INFINITY + 4.0 / PI * sum
}

/// Bound on the terms dropped by truncating [`p_gaussian`] at `k_max`.
pub fn gaussian_tail_bound(k_max: usize) -> f64 {
    2.0 / (PI * (2.0 * k_max as f64 + 1.0))
}

/// Leading-order long-time form
/// `1 − 2/π − (4/3π) cos(2Ωt) exp(−2σ²t²)`. Only meaningful for
/// `σt ≳ 1`; at `t = 0` it evaluates to a negative number.
pub fn p_asymptotic_gaussian(t: f64, omega: f64, sigma: f64) -> f64 {
    P_INFINITY - 4.0 / (3.0 * PI) * (2.0 * omega * t).cos() * (-2.0 * sigma * sigma * t * t).exp()
}

/// Frequency density for [`p_numeric`].
#[derive(Clone)]
pub enum FrequencyDensity {
    /// Density function supported on `[lower, upper]`.
    Continuous {
        pdf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        lower: f64,
        upper: f64,
    },
    /// Point masses `(value, weight)`.
    Atoms(Vec<(f64, f64)>),
}

impl fmt::Debug for FrequencyDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrequencyDensity::Continuous { lower, upper, .. } => {
                write!(f, "Continuous([{lower}, {upper}])")
            }
            FrequencyDensity::Atoms(a) => write!(f, "Atoms({a:?})"),
        }
    }
}

impl FrequencyDensity {
    /// Gaussian density truncated at ±12 standard deviations.
    pub fn gaussian(mean: f64, std: f64) -> Self {
        let norm = 1.0 / (std * (2.0 * PI).sqrt());
        FrequencyDensity::Continuous {
            pdf: Arc::new(move |x| {
                let z = (x - mean) / std;
                norm * (-0.5 * z * z).exp()
            }),
            lower: mean - 12.0 * std,
            upper: mean + 12.0 * std,
        }
    }

    pub fn two_point(eta: f64, omega1: f64, omega2: f64) -> Self {
        FrequencyDensity::Atoms(vec![(omega1, eta), (omega2, 1.0 - eta)])
    }

    pub fn total_mass(&self, tolerance: f64) -> Result<f64> {
        match self {
            FrequencyDensity::Continuous { pdf, lower, upper } => {
                Ok(numeric::integrate(|x| pdf(x), *lower, *upper, tolerance)?.value)
            }
            FrequencyDensity::Atoms(atoms) => Ok(atoms.iter().map(|a| a.1).sum()),
        }
    }
}

/// `1 − ∫ P(x)|cos(xt)| dx` by adaptive quadrature, split at the kinks of
/// `|cos(xt)|`. Serves as the reference for the closed forms above.
pub fn p_numeric(density: &FrequencyDensity, t: f64, tolerance: f64) -> Result<f64> {
    if !(tolerance > 0.0) {
        return domain("quadrature tolerance must be positive");
    }
    let mass = density.total_mass(tolerance * 0.1)?;
    if (mass - 1.0).abs() > tolerance {
        return domain(format!("density integrates to {mass}, expected 1"));
    }
    match density {
        FrequencyDensity::Atoms(atoms) => {
            Ok(1.0 - atoms.iter().map(|&(x, w)| w * (x * t).cos().abs()).sum::<f64>())
        }
        FrequencyDensity::Continuous { pdf, lower, upper } => {
            let mut breaks = Vec::new();
            if t != 0.0 {
                // Zeros of cos(xt): x = (k + 1/2)π/t.
                let step = PI / t.abs();
                let k_lo = (lower / step - 0.5).ceil() as i64;
                let k_hi = (upper / step - 0.5).floor() as i64;
                if k_hi >= k_lo && k_hi - k_lo < 100_000 {
                    breaks.extend((k_lo..=k_hi).map(|k| (k as f64 + 0.5) * step));
                }
            }
            let r = numeric::integrate_with_breaks(
                |x| pdf(x) * (x * t).cos().abs(),
                *lower,
                *upper,
                &breaks,
                tolerance * 0.1,
            )?;
            Ok(1.0 - r.value)
        }
    }
}

/// Best rational approximation `l/m` of `x > 0` among continued-fraction
/// convergents with `m ≤ max_den`, accepted only if it matches `x` to
/// relative tolerance `rel_tol`.
pub fn rational_approximation(x: f64, max_den: u64, rel_tol: f64) -> Option<(u64, u64)> {
    if !(x > 0.0) || !x.is_finite() {
        return None;
    }
    let (mut h_prev, mut h) = (0u128, 1u128);
    let (mut k_prev, mut k) = (1u128, 0u128);
    let mut rem = x;
    for _ in 0..64 {
        let a = rem.floor();
        if a > 1e15 {
            return None;
        }
        let a_int = a as u128;
        let h_next = a_int * h + h_prev;
        let k_next = a_int * k + k_prev;
        if k_next > max_den as u128 {
            return None;
        }
        (h_prev, h) = (h, h_next);
        (k_prev, k) = (k, k_next);
        if ((h as f64 / k as f64) - x).abs() <= rel_tol * x {
            return Some((h as u64, k as u64));
        }
        let frac = rem - a;
        if frac <= 0.0 {
            return None;
        }
        rem = 1.0 / frac;
    }
    None
}

/// Period of `p_bernoulli` in `t`: `mπ/Ω₁` when `Ω₂/Ω₁ = l/m` in lowest
/// terms, or `None` when the ratio is not detected as rational (the curve
/// is then quasi-periodic).
pub fn bernoulli_period(omega1: f64, omega2: f64) -> Option<f64> {
    if !(omega1 > 0.0 && omega2 > 0.0) {
        return None;
    }
    let (_, m) = rational_approximation(omega2 / omega1, MAX_PERIOD_DENOMINATOR, RATIO_TOLERANCE)?;
    Some(m as f64 * PI / omega1)
}

/// Parameters of an analytic `p(t)` curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticCurve {
    Gaussian { omega: f64, sigma: f64, k_max: usize },
    GaussianAsymptotic { omega: f64, sigma: f64 },
    Bernoulli { eta: f64, omega1: f64, omega2: f64 },
}

impl AnalyticCurve {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AnalyticCurve::Gaussian { k_max, sigma, .. } => {
                if k_max < 1 {
                    return domain("k_max must be at least 1");
                }
                if !(sigma >= 0.0) {
                    return domain("sigma must be nonnegative");
                }
            }
            AnalyticCurve::GaussianAsymptotic { sigma, .. } => {
                if !(sigma >= 0.0) {
                    return domain("sigma must be nonnegative");
                }
            }
            AnalyticCurve::Bernoulli { eta, .. } => {
                if !(0.0..=1.0).contains(&eta) {
                    return domain("eta must lie in [0, 1]");
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            AnalyticCurve::Gaussian { omega, sigma, k_max } => p_gaussian(t, omega, sigma, k_max),
            AnalyticCurve::GaussianAsymptotic { omega, sigma } => {
                p_asymptotic_gaussian(t, omega, sigma)
            }
            AnalyticCurve::Bernoulli { eta, omega1, omega2 } => p_bernoulli(t, eta, omega1, omega2),
        }
    }
}
