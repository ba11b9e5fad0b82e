//! Assembly of the Symm operator `K = K₀ + C` in Fourier coordinates.
//!
//! `K₀` is applied exactly through its eigen-decomposition
//! (`K₀ e^{ikt} = e^{ikt}/|k|` for `k ≠ 0`, constants are fixed), so no
//! logarithmic singularity is ever quadratured. Only the smooth remainder
//! kernel `k(t,s)` is integrated, by the m-point periodic trapezoidal rule,
//! which is spectrally accurate here.
//!
//! The assembly stores, for every `|k| ≤ M`, the degree-M coefficient vector
//! of `K e^{ikt}`; entry `j` of column `k` is the Galerkin matrix element
//! `A_{jk} = ⟨K e^{ikt}, e^{ijt}⟩` in the `1/(2π)`-weighted pairing.
//!
//! Both quadrature stages are uniform-grid transforms, so each column is
//! produced by one FFT over the quadrature nodes and one FFT over the target
//! frequencies instead of `O(m²M)` direct summation.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use realfft::RealFftPlanner;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::curve::{self, BoundaryCurve};
use crate::fourier::FourierVector;
use crate::{Error, Result};

/// A smooth-part column with at least this fraction of its `H⁰` mass outside
/// `|j| ≤ M/2` indicates that the ambient truncation `M` is too small for the
/// curve.
pub const TAIL_ENERGY_THRESHOLD: f64 = 1e-8;

/// Tail-energy certificate for an assembly.
///
/// Only columns `|k| ≤ M/2` are examined — the half the solvers actually
/// consume (every solver enforces `n ≤ M/4`). Columns beyond `M/2`
/// legitimately concentrate their mass near `|j| ≈ |k| > M/2` because the
/// smooth part is nearly a convolution, so including them would flag every
/// curve at every `M`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailDiagnostic {
    /// Largest outer-mass fraction seen over the checked columns.
    pub worst_fraction: f64,
    /// Column index attaining it.
    pub worst_column: i64,
    /// Whether `worst_fraction` reaches [`TAIL_ENERGY_THRESHOLD`].
    pub exceeded: bool,
}

/// The quadratured smooth part `C`: columns `C e^{ikt}` for `|k| ≤ M`.
#[derive(Clone, Debug)]
pub struct SmoothPart {
    /// Column for `k` at index `k + M`, each of degree `M`.
    pub columns: Vec<FourierVector>,
    /// Tail-energy check over the solver-visible columns.
    pub tail: TailDiagnostic,
}

/// The assembled operator: columns of `K e^{ikt}` to degree `M`.
#[derive(Clone, Debug, Serialize)]
pub struct OperatorAssembly {
    #[serde(rename = "M")]
    max_index: usize,
    m: usize,
    curve: BoundaryCurve,
    columns: Vec<FourierVector>,
    #[serde(skip)]
    tail: TailDiagnostic,
}

impl OperatorAssembly {
    /// Ambient truncation order `M`.
    pub fn max_index(&self) -> usize {
        self.max_index
    }

    /// Quadrature grid size.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    /// All columns, index `k + M`.
    pub fn columns(&self) -> &[FourierVector] {
        &self.columns
    }

    /// The column holding `K e^{ikt}`.
    pub fn column(&self, k: i64) -> &FourierVector {
        assert!(
            k.unsigned_abs() as usize <= self.max_index,
            "column index {k} outside window M = {}",
            self.max_index
        );
        &self.columns[(k + self.max_index as i64) as usize]
    }

    /// Galerkin matrix entry `A_{jk} = ⟨K e^{ikt}, e^{ijt}⟩`.
    pub fn entry(&self, j: i64, k: i64) -> Complex64 {
        self.column(k).coeff(j)
    }

    /// Tail-energy diagnostic recorded at assembly time.
    pub fn tail(&self) -> &TailDiagnostic {
        &self.tail
    }
}

/// Default ambient truncation for a solver degree `n`.
pub fn default_max_index(n: usize) -> usize {
    (4 * n).max(64)
}

/// Default quadrature grid for an ambient truncation `M`: twice the
/// anti-aliasing minimum `2(2M+1)`.
pub fn default_grid(max_index: usize) -> usize {
    4 * (2 * max_index + 1)
}

/// Applies `K₀` exactly: coefficient `k` is scaled by `1/|k|` (`1` for `k=0`).
pub fn k0_apply(v: &FourierVector) -> FourierVector {
    FourierVector::from_fn(v.max_index(), |k| {
        if k == 0 {
            v.coeff(0)
        } else {
            v.coeff(k) / k.unsigned_abs() as f64
        }
    })
}

/// Quadratures the smooth part: for each `|k| ≤ M`, the trapezoidal rule for
/// `(C e^{iks})(t_j) = ∫₀^{2π} k(t_j, s) e^{iks} ds` on the uniform `m`-grid,
/// followed by the discrete transform back to coefficients of degree `M`.
///
/// Requires the anti-aliasing margin `m ≥ 2(2M+1)`.
pub fn assemble_smooth_part(
    curve: &BoundaryCurve,
    max_index: usize,
    m: usize,
) -> Result<SmoothPart> {
    if m < 2 * (2 * max_index + 1) {
        return Err(Error::QuadratureGrid { m, max_index });
    }
    curve.validate()?;

    let cap = max_index; // M
    let row_len = cap + 1; // stored spectrum 0..=M per grid row

    // Curve samples and the log-chord table ln(4 sin²(πd/m)), d = (i-j) mod m.
    let mut xs = vec![0.0f64; m];
    let mut ys = vec![0.0f64; m];
    let mut kdiag = vec![0.0f64; m];
    for i in 0..m {
        let t = TAU * i as f64 / m as f64;
        let p = curve::eval(curve, t, 0);
        xs[i] = p[0];
        ys[i] = p[1];
        kdiag[i] = curve::smooth_kernel_diagonal_derivatives(curve, t).k_diag;
    }
    let mut lnch2 = vec![0.0f64; m];
    for (d, slot) in lnch2.iter_mut().enumerate().skip(1) {
        let c = 2.0 * (PI * d as f64 / m as f64).sin();
        *slot = (c * c).ln();
    }

    // Stage 1: for every grid row i, sample the kernel over s and transform in
    // s. Row i of `b` holds (2π/m)·Σ_j k(t_i,t_j) e^{ik t_j} for k = 0..=M,
    // i.e. the trapezoidal samples of (C e^{iks})(t_i). The kernel row is
    // real, so a real-input FFT provides the positive half-spectrum and the
    // negative columns follow from conjugate symmetry afterwards.
    let r2c = RealFftPlanner::<f64>::new().plan_fft_forward(m);
    let inv_two_pi = 1.0 / TAU;
    let scale = TAU / m as f64;
    let mut b = vec![Complex64::ZERO; m * row_len];

    let fill_row = |i: usize, out: &mut [Complex64]| {
        let mut row = vec![0.0f64; m];
        let mut spectrum = r2c.make_output_vec();
        let mut scratch = r2c.make_scratch_vec();
        for (j, slot) in row.iter_mut().enumerate() {
            let d = if j <= i { i - j } else { i + m - j };
            *slot = if d == 0 {
                kdiag[i]
            } else {
                let dx = xs[i] - xs[j];
                let dy = ys[i] - ys[j];
                (lnch2[d] - (dx * dx + dy * dy).ln()) * inv_two_pi - inv_two_pi
            };
        }
        r2c.process_with_scratch(&mut row, &mut spectrum, &mut scratch)
            .expect("real FFT on a full-length buffer");
        for (k, slot) in out.iter_mut().enumerate() {
            // Inverse transform of a real row = conjugate of the forward one.
            *slot = spectrum[k].conj() * scale;
        }
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        b.par_chunks_mut(row_len).enumerate().for_each(|(i, chunk)| fill_row(i, chunk));
    }
    #[cfg(not(feature = "parallel"))]
    b.chunks_mut(row_len).enumerate().for_each(|(i, chunk)| fill_row(i, chunk));

    // Stage 2: transform in t. Column k of `b` holds the samples S_k(t_i);
    // its coefficients are c_{jk} = (1/m) Σ_i S_k(t_i) e^{-ij t_i}. Columns
    // are gathered in small blocks to keep the strided reads cache-friendly.
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    let inv_m = 1.0 / m as f64;
    let blocks: Vec<usize> = (0..row_len).step_by(COLUMN_BLOCK).collect();
    let transform_block = |k0: usize| -> Vec<FourierVector> {
        let width = COLUMN_BLOCK.min(row_len - k0);
        let mut cols = vec![vec![Complex64::ZERO; m]; width];
        for j in 0..m {
            let base = j * row_len + k0;
            for (c, col) in cols.iter_mut().enumerate() {
                col[j] = b[base + c];
            }
        }
        cols.into_iter()
            .map(|mut col| {
                fft.process(&mut col);
                FourierVector::from_fn(cap, |j| col[j.rem_euclid(m as i64) as usize] * inv_m)
            })
            .collect()
    };

    #[cfg(feature = "parallel")]
    let positive: Vec<Vec<FourierVector>> = {
        use rayon::prelude::*;
        blocks.par_iter().map(|&k0| transform_block(k0)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let positive: Vec<Vec<FourierVector>> = blocks.iter().map(|&k0| transform_block(k0)).collect();
    drop(b);
    let positive: Vec<FourierVector> = positive.into_iter().flatten().collect();

    // The kernel is real, so C e^{-iks} = conj(C e^{iks}) pointwise and the
    // coefficients obey c_{j,-k} = conj(c_{-j,k}).
    let signed = max_index as i64;
    let columns: Vec<FourierVector> = (-signed..=signed)
        .map(|k| {
            if k >= 0 {
                positive[k as usize].clone()
            } else {
                FourierVector::from_fn(cap, |j| positive[(-k) as usize].coeff(-j).conj())
            }
        })
        .collect();

    let tail = tail_diagnostic(&columns, max_index);
    Ok(SmoothPart { columns, tail })
}

/// Column-block width for the stage-2 gather.
const COLUMN_BLOCK: usize = 32;

fn tail_diagnostic(columns: &[FourierVector], max_index: usize) -> TailDiagnostic {
    let signed = max_index as i64;
    let mut worst_fraction = 0.0f64;
    let mut worst_column = 0i64;
    for k in -signed..=signed {
        if 2 * k.abs() > signed {
            continue;
        }
        let col = &columns[(k + signed) as usize];
        let mut total = 0.0;
        let mut outer = 0.0;
        for (j, c) in col.iter() {
            let e = c.norm_sqr();
            total += e;
            if 2 * j.abs() > signed {
                outer += e;
            }
        }
        // Columns at the bottom of f64 range are quadrature roundoff of an
        // exactly vanishing column; their mass distribution carries no
        // information.
        let fraction = if total < 1e-28 { 0.0 } else { outer / total };
        if fraction > worst_fraction {
            worst_fraction = fraction;
            worst_column = k;
        }
    }
    TailDiagnostic { worst_fraction, worst_column, exceeded: worst_fraction >= TAIL_ENERGY_THRESHOLD }
}

/// Assembles `K = K₀ + C`: the smooth-part columns plus the exact `K₀`
/// eigenvalues on the diagonal.
pub fn assemble_operator(
    curve: &BoundaryCurve,
    max_index: usize,
    m: usize,
) -> Result<OperatorAssembly> {
    let SmoothPart { mut columns, tail } = assemble_smooth_part(curve, max_index, m)?;
    let signed = max_index as i64;
    for k in -signed..=signed {
        let eigen = if k == 0 { 1.0 } else { 1.0 / k.unsigned_abs() as f64 };
        let col = &mut columns[(k + signed) as usize];
        col.set_coeff(k, col.coeff(k) + Complex64::new(eigen, 0.0));
    }
    Ok(OperatorAssembly { max_index, m, curve: curve.clone(), columns, tail })
}

/// The Galerkin image `Q_M K v` as a linear combination of stored columns.
/// Refuses vectors wider than the assembly window.
pub fn apply_k(assembly: &OperatorAssembly, v: &FourierVector) -> Result<FourierVector> {
    if v.max_index() > assembly.max_index {
        return Err(Error::Truncation { degree: v.max_index(), max_index: assembly.max_index });
    }
    let width = 2 * assembly.max_index + 1;
    let mut acc = vec![Complex64::ZERO; width];
    for (k, vk) in v.iter() {
        if vk == Complex64::ZERO {
            continue;
        }
        let col = assembly.column(k);
        for (slot, &c) in acc.iter_mut().zip(col.coeffs()) {
            *slot += vk * c;
        }
    }
    FourierVector::from_coeffs(assembly.max_index, acc)
}
