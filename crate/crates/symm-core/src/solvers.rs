//! The three Petrov-Galerkin solution pipelines.
//!
//! All three act on an [`OperatorAssembly`] holding the degree-M columns
//! `K e^{ikt}` and a right-hand side `b`, and produce a trigonometric
//! solution of window degree `n`:
//!
//! * **BG** (Bubnov-Galerkin): the square window system
//!   `⟨K e_k, e_j⟩ x_k = b_j`, `|j|, |k| ≤ n`.
//! * **LS** (least squares): minimizes `‖Σ x_k K e_k - b‖_{H⁰}` over the
//!   degree-M representation of the columns.
//! * **DLS** (dual least squares): solves `⟨K K* u, e_j⟩ = ⟨b, e_j⟩` for
//!   `u` of degree `n` and returns `K* u`, which lives in the full degree-M
//!   space on general curves.
//!
//! Every linear solve goes through a rank-revealing column-pivoted QR; a
//! condition estimate above [`CONDITION_CUTOFF`] is reported as a singular
//! system rather than silently regularized, because the divergence phenomena
//! this crate measures must not be masked by a pseudo-inverse truncation.

use std::fmt;
use std::str::FromStr;

use faer::linalg::solvers::ColPivQr;
use faer::prelude::*;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fourier::{self, FourierVector};
use crate::operator::{apply_k, OperatorAssembly};
use crate::{Error, Result};

/// Condition-estimate cutoff above which a system is treated as singular.
pub const CONDITION_CUTOFF: f64 = 1e14;

/// Selector for the three projection pipelines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MethodKind {
    Ls,
    Dls,
    Bg,
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodKind::Ls => "LS",
            MethodKind::Dls => "DLS",
            MethodKind::Bg => "BG",
        })
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LS" => Ok(MethodKind::Ls),
            "DLS" => Ok(MethodKind::Dls),
            "BG" => Ok(MethodKind::Bg),
            other => Err(Error::Domain(format!(
                "unknown method {other:?}; expected \"LS\", \"DLS\", or \"BG\""
            ))),
        }
    }
}

/// Result of one projection solve.
///
/// `residual_norm` is always the full residual `‖Q_M K x - b‖_{H⁰}` computed
/// from the stored degree-M columns — for LS that is exactly the minimized
/// quantity, for BG/DLS it reports how much of `b` the window solution
/// actually explains (their window residual is zero by construction).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: MethodKind,
    pub n: usize,
    pub residual_norm: f64,
    pub condition_estimate: f64,
    pub solution: FourierVector,
}

/// Dispatches to the solver selected by `method`.
pub fn solve(
    method: MethodKind,
    assembly: &OperatorAssembly,
    b: &FourierVector,
    n: usize,
) -> Result<SolveReport> {
    match method {
        MethodKind::Ls => solve_ls(assembly, b, n),
        MethodKind::Dls => solve_dls(assembly, b, n),
        MethodKind::Bg => solve_bg(assembly, b, n),
    }
}

fn check_rhs(assembly: &OperatorAssembly, b: &FourierVector) -> Result<()> {
    if b.max_index() > assembly.max_index() {
        return Err(Error::Truncation { degree: b.max_index(), max_index: assembly.max_index() });
    }
    Ok(())
}

fn check_window_margin(assembly: &OperatorAssembly, n: usize) -> Result<()> {
    if 4 * n > assembly.max_index() {
        return Err(Error::Domain(format!(
            "window degree n = {n} exceeds the ambient margin n <= M/4 (M = {})",
            assembly.max_index()
        )));
    }
    Ok(())
}

/// Rank-revealing condition estimate: ratio of extreme `|R_ii|` of the
/// column-pivoted QR, clamped to `>= 1`.
fn condition_estimate(qr: &ColPivQr<Complex64>) -> f64 {
    let r = qr.R();
    let k = r.nrows().min(r.ncols());
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0f64;
    for i in 0..k {
        let d = r[(i, i)].norm();
        dmin = dmin.min(d);
        dmax = dmax.max(d);
    }
    if dmin == 0.0 {
        f64::INFINITY
    } else {
        (dmax / dmin).max(1.0)
    }
}

fn checked_qr(mat: &Mat<Complex64>) -> Result<(ColPivQr<Complex64>, f64)> {
    let qr = mat.col_piv_qr();
    let condition = condition_estimate(&qr);
    if !(condition <= CONDITION_CUTOFF) {
        return Err(Error::SingularSystem { condition, cutoff: CONDITION_CUTOFF });
    }
    Ok((qr, condition))
}

/// The trial-column matrix `G`: all degree-M rows of the columns `|k| ≤ n`.
fn column_matrix(assembly: &OperatorAssembly, n: usize) -> Mat<Complex64> {
    let cap = assembly.max_index();
    let offset = cap - n;
    Mat::from_fn(2 * cap + 1, 2 * n + 1, |j, c| assembly.columns()[c + offset].coeffs()[j])
}

/// The square Bubnov-Galerkin window `A_{jk}`, `|j|, |k| ≤ n`.
fn bg_window(assembly: &OperatorAssembly, n: usize) -> Mat<Complex64> {
    let offset = assembly.max_index() - n;
    Mat::from_fn(2 * n + 1, 2 * n + 1, |j, c| {
        assembly.columns()[c + offset].coeffs()[j + offset]
    })
}

/// The test-window rows `A_{jk}`, `|j| ≤ n`, all `|k| ≤ M`.
fn test_window(assembly: &OperatorAssembly, n: usize) -> Mat<Complex64> {
    let cap = assembly.max_index();
    let offset = cap - n;
    Mat::from_fn(2 * n + 1, 2 * cap + 1, |j, c| assembly.columns()[c].coeffs()[j + offset])
}

fn rhs_window(b: &FourierVector, n: usize) -> Mat<Complex64> {
    let signed = n as i64;
    Mat::from_fn(2 * n + 1, 1, |j, _| b.coeff(j as i64 - signed))
}

fn window_to_vector(x: &Mat<Complex64>, n: usize) -> FourierVector {
    FourierVector::from_fn(n, |k| x[((k + n as i64) as usize, 0)])
}

fn full_residual(
    assembly: &OperatorAssembly,
    solution: &FourierVector,
    b: &FourierVector,
) -> Result<f64> {
    let image = apply_k(assembly, solution)?;
    Ok(fourier::sobolev_norm(&image.sub(b), 0.0))
}

fn report(
    method: MethodKind,
    assembly: &OperatorAssembly,
    b: &FourierVector,
    n: usize,
    condition_estimate: f64,
    solution: FourierVector,
) -> Result<SolveReport> {
    let residual_norm = full_residual(assembly, &solution, b)?;
    Ok(SolveReport { method, n, residual_norm, condition_estimate, solution })
}

/// Bubnov-Galerkin: trial and test space are both `span{e^{ikt}}_{|k| ≤ n}`.
pub fn solve_bg(assembly: &OperatorAssembly, b: &FourierVector, n: usize) -> Result<SolveReport> {
    if n > assembly.max_index() {
        return Err(Error::Domain(format!(
            "window degree n = {n} exceeds the assembly order M = {}",
            assembly.max_index()
        )));
    }
    check_rhs(assembly, b)?;
    let (qr, condition) = checked_qr(&bg_window(assembly, n))?;
    let x = qr.solve_lstsq(rhs_window(b, n));
    report(MethodKind::Bg, assembly, b, n, condition, window_to_vector(&x, n))
}

/// Least squares: minimizes the `H⁰` image residual over the degree-M
/// representation of `K(X_n)`. Requires the ambient margin `n ≤ M/4`.
pub fn solve_ls(assembly: &OperatorAssembly, b: &FourierVector, n: usize) -> Result<SolveReport> {
    check_window_margin(assembly, n)?;
    check_rhs(assembly, b)?;
    let (qr, condition) = checked_qr(&column_matrix(assembly, n))?;
    let x = qr.solve_lstsq(rhs_window(b, assembly.max_index()));
    report(MethodKind::Ls, assembly, b, n, condition, window_to_vector(&x, n))
}

/// Dual least squares: the Gram system `T T^H u = b_n` with `T` the test
/// window, then `x = T^H u = K* u`. Requires the ambient margin `n ≤ M/4`.
pub fn solve_dls(assembly: &OperatorAssembly, b: &FourierVector, n: usize) -> Result<SolveReport> {
    check_window_margin(assembly, n)?;
    check_rhs(assembly, b)?;
    let t = test_window(assembly, n);
    let gram = &t * t.adjoint();
    let (qr, condition) = checked_qr(&gram)?;
    let u = qr.solve_lstsq(rhs_window(b, n));
    let x = t.adjoint() * &u;
    report(MethodKind::Dls, assembly, b, n, condition, window_to_vector(&x, assembly.max_index()))
}

/// The least-squares stability number
/// `σ_n = max{ ‖z‖_{H⁰} : z ∈ X_n, ‖Kz‖_{H⁰} = 1 }`, computed as the
/// reciprocal smallest singular value of the degree-M column matrix
/// restricted to `X_n`.
pub fn stability_sigma(assembly: &OperatorAssembly, n: usize) -> Result<f64> {
    check_window_margin(assembly, n)?;
    let g = column_matrix(assembly, n);
    let sv = g
        .singular_values()
        .map_err(|_| Error::Domain("singular value computation did not converge".into()))?;
    let smallest = sv.last().copied().unwrap_or(0.0);
    Ok(if smallest == 0.0 { f64::INFINITY } else { 1.0 / smallest })
}
