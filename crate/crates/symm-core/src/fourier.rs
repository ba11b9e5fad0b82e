//! Trigonometric coefficient vectors and the periodic Sobolev scale.
//!
//! A [`FourierVector`] stores the coefficients `a_k` of `x(t) = Σ a_k e^{ikt}`
//! for `|k| ≤ M`. With the `1/(2π)`-weighted `L²` inner product the basis
//! `{e^{ikt}}` is orthonormal, so the `H^r` norm is
//! `(Σ (1+k²)^r |a_k|²)^{1/2}` and negative `r` gives the dual norms.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense vector of Fourier coefficients `a_k`, `|k| ≤ max_index`.
///
/// Serializes as `{"max_index": M, "re": [...], "im": [...]}` with both arrays
/// of length `2M+1` running over `k = -M..=M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FourierVectorRepr", into = "FourierVectorRepr")]
pub struct FourierVector {
    max_index: usize,
    /// Coefficient `a_k` lives at slice index `k + max_index`.
    coeffs: Vec<Complex64>,
}

impl FourierVector {
    /// The zero vector of degree `max_index`.
    pub fn zeros(max_index: usize) -> Self {
        Self { max_index, coeffs: vec![Complex64::ZERO; 2 * max_index + 1] }
    }

    /// Wraps a coefficient slice; `coeffs[k + max_index]` is `a_k`.
    pub fn from_coeffs(max_index: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * max_index + 1 {
            return Err(Error::Domain(format!(
                "coefficient vector of degree {} must have length {}, got {}",
                max_index,
                2 * max_index + 1,
                coeffs.len()
            )));
        }
        Ok(Self { max_index, coeffs })
    }

    /// Builds a vector by evaluating `f(k)` for every `k` in `-M..=M`.
    pub fn from_fn(max_index: usize, mut f: impl FnMut(i64) -> Complex64) -> Self {
        let m = max_index as i64;
        Self { max_index, coeffs: (-m..=m).map(&mut f).collect() }
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    /// Raw coefficient slice over `k = -M..=M`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient `a_k`; zero outside the stored window.
    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.max_index {
            Complex64::ZERO
        } else {
            self.coeffs[(k + self.max_index as i64) as usize]
        }
    }

    /// Sets `a_k`. Panics when `|k| > max_index`.
    pub fn set_coeff(&mut self, k: i64, value: Complex64) {
        assert!(
            k.unsigned_abs() as usize <= self.max_index,
            "coefficient index {} outside degree-{} window",
            k,
            self.max_index
        );
        self.coeffs[(k + self.max_index as i64) as usize] = value;
    }

    /// Iterates `(k, a_k)` over the stored window.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let m = self.max_index as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - m, c))
    }

    /// Copy with the window grown or truncated to `max_index`.
    pub fn resized(&self, max_index: usize) -> Self {
        Self::from_fn(max_index, |k| self.coeff(k))
    }

    /// Coefficient-wise difference, on the union of the two windows.
    pub fn sub(&self, other: &Self) -> Self {
        let m = self.max_index.max(other.max_index);
        Self::from_fn(m, |k| self.coeff(k) - other.coeff(k))
    }

    /// Coefficient-wise sum, on the union of the two windows.
    pub fn add(&self, other: &Self) -> Self {
        let m = self.max_index.max(other.max_index);
        Self::from_fn(m, |k| self.coeff(k) + other.coeff(k))
    }

    /// Scales every coefficient.
    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            max_index: self.max_index,
            coeffs: self.coeffs.iter().map(|&c| c * factor).collect(),
        }
    }

    /// Whether the vector represents a real-valued function, i.e.
    /// `a_{-k} = conj(a_k)` for all `k`, to absolute tolerance `tol`.
    pub fn is_real_symmetric(&self, tol: f64) -> bool {
        let m = self.max_index as i64;
        (0..=m).all(|k| (self.coeff(-k) - self.coeff(k).conj()).norm() <= tol)
    }
}

#[derive(Serialize, Deserialize)]
struct FourierVectorRepr {
    max_index: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl From<FourierVector> for FourierVectorRepr {
    fn from(v: FourierVector) -> Self {
        Self {
            max_index: v.max_index,
            re: v.coeffs.iter().map(|c| c.re).collect(),
            im: v.coeffs.iter().map(|c| c.im).collect(),
        }
    }
}

impl TryFrom<FourierVectorRepr> for FourierVector {
    type Error = Error;

    fn try_from(repr: FourierVectorRepr) -> Result<Self> {
        let want = 2 * repr.max_index + 1;
        if repr.re.len() != want || repr.im.len() != want {
            return Err(Error::Domain(format!(
                "serialized vector of degree {} must carry {} re/im entries, got {}/{}",
                repr.max_index,
                want,
                repr.re.len(),
                repr.im.len()
            )));
        }
        let coeffs = repr.re.iter().zip(&repr.im).map(|(&re, &im)| Complex64::new(re, im)).collect();
        Ok(Self { max_index: repr.max_index, coeffs })
    }
}

/// Recovers the coefficients `a_k = (1/m) Σ_j samples[j] e^{-ik t_j}`,
/// `|k| ≤ max_index`, from values on the uniform grid `t_j = 2πj/m`.
///
/// This is the discrete realization of `a_k = (1/2π) ∫ x(s) e^{-iks} ds` and
/// is exact for trigonometric polynomials of degree `≤ (m-1)/2`. Requires
/// `m ≥ 2·max_index + 1`; fewer samples would alias the requested window.
pub fn samples_to_coeffs(samples: &[Complex64], max_index: usize) -> Result<FourierVector> {
    let m = samples.len();
    if m < 2 * max_index + 1 {
        return Err(Error::Aliasing { m, max_index });
    }
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    // Forward DFT gives X[j] = Σ_l x_l e^{-2πi jl/m}; a_k = X[k mod m]/m.
    let inv_m = 1.0 / m as f64;
    Ok(FourierVector::from_fn(max_index, |k| buf[k.rem_euclid(m as i64) as usize] * inv_m))
}

/// Evaluates `Σ_k a_k e^{ikt}` at the angle `t`.
pub fn eval_fourier(v: &FourierVector, t: f64) -> Complex64 {
    // Accumulate e^{ikt} by recurrence from e^{-iMt}; one exp total.
    let m = v.max_index() as f64;
    let step = Complex64::new(0.0, t).exp();
    let mut phase = Complex64::new(0.0, -m * t).exp();
    let mut acc = Complex64::ZERO;
    for &c in v.coeffs() {
        acc += c * phase;
        phase *= step;
    }
    acc
}

/// Sobolev weight `(1+k²)^r`.
fn weight(k: i64, r: f64) -> f64 {
    let k2 = (k * k) as f64;
    if r == 0.0 {
        1.0
    } else {
        (1.0 + k2).powf(r)
    }
}

/// The `H^r` norm `(Σ (1+k²)^r |a_k|²)^{1/2}`; negative `r` gives the dual
/// norms of the scale.
pub fn sobolev_norm(v: &FourierVector, r: f64) -> f64 {
    v.iter().map(|(k, c)| weight(k, r) * c.norm_sqr()).sum::<f64>().sqrt()
}

/// The `H^r` inner product `Σ (1+k²)^r a_k conj(b_k)`; the shorter window is
/// implicitly zero-padded.
pub fn sobolev_inner(x: &FourierVector, y: &FourierVector, r: f64) -> Complex64 {
    let m = x.max_index().max(y.max_index()) as i64;
    (-m..=m).map(|k| weight(k, r) * x.coeff(k) * y.coeff(k).conj()).sum()
}

/// The orthogonal projection `P_n` onto `span{e^{ikt}}_{|k| ≤ n}`. When
/// `n ≥ max_index` the vector is returned unchanged.
pub fn project(v: &FourierVector, n: usize) -> FourierVector {
    if n >= v.max_index() {
        v.clone()
    } else {
        v.resized(n)
    }
}
