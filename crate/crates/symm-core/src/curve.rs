//! Boundary curves and the smooth remainder kernel `k(t,s)`.
//!
//! Every supported curve is a trigonometric polynomial (disc, ellipse, finite
//! Fourier series), so derivatives up to order 3 are available in closed form
//! and the curves are 2π-periodic exactly.
//!
//! The kernel split of the single-layer operator subtracts the reference
//! kernel `-(1/π) ln|2 sin((t-s)/2)| + 1/(2π)` (whose operator `K₀` is
//! diagonal in the Fourier basis) and leaves the smooth remainder
//!
//! ```text
//!   k(t,s) = -(1/π) ln( |γ(t)-γ(s)| / |2 sin((t-s)/2)| ) - 1/(2π),
//! ```
//!
//! which has a removable singularity on the diagonal. Its diagonal value and
//! first two diagonal `t`-derivatives have closed forms in `γ'`, `γ''`, `γ'''`
//! and are used both for quadrature at the singular node and as a
//! finite-difference cross-check.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Below this value of `|2 sin((t-s)/2)|` the direct kernel formula loses its
/// precision to cancellation, and the diagonal continuation (with a
/// first-order Taylor correction) is used instead.
pub const DIAGONAL_SWITCH_THRESHOLD: f64 = 1e-6;

/// A closed planar curve `γ(s) = (a(s), b(s))`, 2π-periodic and smooth.
///
/// In configuration files this serializes as one of
/// `{"kind":"disc","radius":r}`, `{"kind":"ellipse","ax":…,"ay":…}`, or
/// `{"kind":"trig","a_coeffs":[…],"b_coeffs":[…]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryCurve {
    /// `γ(s) = radius·(cos s, sin s)`.
    Disc { radius: f64 },
    /// `γ(s) = (ax·cos s, ay·sin s)`.
    Ellipse { ax: f64, ay: f64 },
    /// Coordinates given by finite real Fourier series. Each coefficient table
    /// is laid out as `[c₀, c₁cos, c₁sin, c₂cos, c₂sin, …]`, i.e.
    /// `a(s) = c[0] + Σ_j c[2j-1]·cos(js) + c[2j]·sin(js)`; a missing trailing
    /// sine coefficient is treated as zero.
    Trig { a_coeffs: Vec<f64>, b_coeffs: Vec<f64> },
}

impl BoundaryCurve {
    pub fn disc(radius: f64) -> Result<Self> {
        let curve = Self::Disc { radius };
        curve.validate()?;
        Ok(curve)
    }

    pub fn ellipse(ax: f64, ay: f64) -> Result<Self> {
        let curve = Self::Ellipse { ax, ay };
        curve.validate()?;
        Ok(curve)
    }

    pub fn trig(a_coeffs: Vec<f64>, b_coeffs: Vec<f64>) -> Result<Self> {
        let curve = Self::Trig { a_coeffs, b_coeffs };
        curve.validate()?;
        Ok(curve)
    }

    /// Checks the standing assumptions: positive finite shape parameters and
    /// `|γ'(s)| > 0` on a 1024-point grid. Deserialized configuration values
    /// should be validated through this before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Disc { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidCurve(format!("disc radius must be positive, got {radius}")));
                }
            }
            Self::Ellipse { ax, ay } => {
                if !(ax.is_finite() && ay.is_finite() && *ax > 0.0 && *ay > 0.0) {
                    return Err(Error::InvalidCurve(format!("ellipse semi-axes must be positive, got ({ax}, {ay})")));
                }
            }
            Self::Trig { a_coeffs, b_coeffs } => {
                if a_coeffs.is_empty() || b_coeffs.is_empty() {
                    return Err(Error::InvalidCurve("trig curve needs at least a constant coefficient per coordinate".into()));
                }
                if a_coeffs.iter().chain(b_coeffs).any(|c| !c.is_finite()) {
                    return Err(Error::InvalidCurve("trig curve coefficients must be finite".into()));
                }
            }
        }
        let report = check_regularity(self, 1024)?;
        if report.min_speed <= 1e-12 {
            return Err(Error::InvalidCurve(format!(
                "curve speed |γ'(s)| drops to {:.3e}; the parametrization must be regular",
                report.min_speed
            )));
        }
        Ok(())
    }
}

/// `γ(s)` and its derivatives; `order` selects γ, γ', γ'', or γ'''.
pub fn eval_curve(curve: &BoundaryCurve, s: f64, order: u32) -> Result<[f64; 2]> {
    if order > 3 {
        return Err(Error::DerivativeOrder(order));
    }
    Ok(eval(curve, s, order as usize))
}

/// `d`-th derivative of `a·cos(js) + b·sin(js)`: each derivative maps the
/// coefficient pair `(a, b) -> (b, -a)` and contributes a factor `j`.
fn harmonic(j: f64, a: f64, b: f64, s: f64, order: usize) -> f64 {
    let (a, b) = match order % 4 {
        0 => (a, b),
        1 => (b, -a),
        2 => (-a, -b),
        _ => (-b, a),
    };
    j.powi(order as i32) * (a * (j * s).cos() + b * (j * s).sin())
}

pub(crate) fn eval(curve: &BoundaryCurve, s: f64, order: usize) -> [f64; 2] {
    match curve {
        BoundaryCurve::Disc { radius } => [
            harmonic(1.0, *radius, 0.0, s, order),
            harmonic(1.0, 0.0, *radius, s, order),
        ],
        BoundaryCurve::Ellipse { ax, ay } => [
            harmonic(1.0, *ax, 0.0, s, order),
            harmonic(1.0, 0.0, *ay, s, order),
        ],
        BoundaryCurve::Trig { a_coeffs, b_coeffs } => {
            [series(a_coeffs, s, order), series(b_coeffs, s, order)]
        }
    }
}

fn series(coeffs: &[f64], s: f64, order: usize) -> f64 {
    let mut acc = if order == 0 { coeffs[0] } else { 0.0 };
    let mut j = 1usize;
    while 2 * j - 1 < coeffs.len() {
        let c_cos = coeffs[2 * j - 1];
        let c_sin = coeffs.get(2 * j).copied().unwrap_or(0.0);
        acc += harmonic(j as f64, c_cos, c_sin, s, order);
        j += 1;
    }
    acc
}

/// Outcome of the sampled regularity / injectivity-scale check.
#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    /// Minimum of `|γ'(s)|` over the grid.
    pub min_speed: f64,
    /// True when, measured from the centroid `z₀`, the whole curve lies
    /// strictly inside or strictly outside the unit circle — a sufficient
    /// condition for the logarithmic potential to be injective. A `false`
    /// here is a warning, not an error: a better center may exist.
    pub injectivity_scale_ok: bool,
    /// The centroid used as `z₀`.
    pub suggested_center: [f64; 2],
}

/// Samples `|γ'|` and the centroid distances on a uniform grid of
/// `grid_size ≥ 64` points.
pub fn check_regularity(curve: &BoundaryCurve, grid_size: usize) -> Result<RegularityReport> {
    if grid_size < 64 {
        return Err(Error::Domain(format!(
            "regularity check needs a grid of at least 64 points, got {grid_size}"
        )));
    }
    let points: Vec<[f64; 2]> =
        (0..grid_size).map(|i| eval(curve, TAU * i as f64 / grid_size as f64, 0)).collect();
    let mut center = [0.0, 0.0];
    for p in &points {
        center[0] += p[0];
        center[1] += p[1];
    }
    center[0] /= grid_size as f64;
    center[1] /= grid_size as f64;

    let mut min_speed = f64::INFINITY;
    let mut min_dist = f64::INFINITY;
    let mut max_dist: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        let d = eval(curve, TAU * i as f64 / grid_size as f64, 1);
        min_speed = min_speed.min(d[0].hypot(d[1]));
        let dist = (p[0] - center[0]).hypot(p[1] - center[1]);
        min_dist = min_dist.min(dist);
        max_dist = max_dist.max(dist);
    }
    Ok(RegularityReport {
        min_speed,
        injectivity_scale_ok: max_dist < 1.0 || min_dist > 1.0,
        suggested_center: center,
    })
}

/// The smooth remainder kernel `k(t,s)`; the diagonal is handled by the
/// closed-form continuation plus a first-order Taylor step.
pub fn smooth_kernel(curve: &BoundaryCurve, t: f64, s: f64) -> f64 {
    let chord = 2.0 * ((t - s) / 2.0).sin();
    if chord.abs() > DIAGONAL_SWITCH_THRESHOLD {
        let gt = eval(curve, t, 0);
        let gs = eval(curve, s, 0);
        let dist2 = (gt[0] - gs[0]).powi(2) + (gt[1] - gs[1]).powi(2);
        // -(1/π) ln(dist/|chord|) - 1/(2π), via squared norms to skip the sqrt.
        -(dist2.ln() - (chord * chord).ln()) / (2.0 * PI) - 1.0 / (2.0 * PI)
    } else {
        // s-t reduced to [-π, π]; t and s may sit on opposite ends of the
        // period, where the raw difference is near ±2π.
        let mut du = (s - t) % TAU;
        if du > PI {
            du -= TAU;
        } else if du < -PI {
            du += TAU;
        }
        let d = smooth_kernel_diagonal_derivatives(curve, t);
        // The diagonal gradient of the symmetric kernel is (g, g) with
        // g = k_t_limit, so the step along s uses the same limit value.
        d.k_diag + du * d.k_t_limit
    }
}

/// Diagonal limits of the smooth kernel: `k(t,t)` and its first two
/// `t`-derivatives, in closed form.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiagonalDerivatives {
    /// `k(t,t) = -(1/π)(ln|γ'(t)| + 1/2)`.
    pub k_diag: f64,
    /// `∂_t k(t,t) = -(γ'·γ'') / (2π |γ'|²)`.
    pub k_t_limit: f64,
    /// `∂²_t k(t,t)`, see the expression in the implementation.
    pub k_tt_limit: f64,
}

/// Evaluates the three diagonal limits at `t` from `γ'`, `γ''`, `γ'''`.
pub fn smooth_kernel_diagonal_derivatives(curve: &BoundaryCurve, t: f64) -> DiagonalDerivatives {
    let d1 = eval(curve, t, 1);
    let d2 = eval(curve, t, 2);
    let d3 = eval(curve, t, 3);
    let p1 = d1[0] * d1[0] + d1[1] * d1[1]; // |γ'|²
    let p12 = d1[0] * d2[0] + d1[1] * d2[1]; // γ'·γ''
    let p13 = d1[0] * d3[0] + d1[1] * d3[1]; // γ'·γ'''
    let p22 = d2[0] * d2[0] + d2[1] * d2[1]; // |γ''|²

    // With D(u) = γ(t+u) - γ(t) expanded to fifth order,
    //   ∂_t [ln|D|² - ln(4 sin²(u/2))] -> p12/p1,
    //   ∂²_t [ln|D|² - ln(4 sin²(u/2))] -> 1/6 + 2p13/(3p1) + p22/(2p1) - p12²/p1²
    // as u -> 0, and k carries the prefactor -(1/2π).
    DiagonalDerivatives {
        k_diag: -(0.5 * p1.ln() + 0.5) / PI,
        k_t_limit: -p12 / (2.0 * PI * p1),
        k_tt_limit: -(1.0 / 12.0 + p13 / (3.0 * p1) + p22 / (4.0 * p1)
            - p12 * p12 / (2.0 * p1 * p1))
            / PI,
    }
}
