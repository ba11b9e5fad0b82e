//! Spectral Galerkin solvers for Symm's integral equation of the first kind,
//!
//! ```text
//!   -(1/pi) ∫₀^{2π} Ψ(s) ln|γ(t) - γ(s)| ds = g(t),
//! ```
//!
//! on smooth closed planar curves γ. The logarithmic kernel is split into a
//! rotation-invariant singular part `K₀`, which is diagonal in the Fourier
//! basis `e^{ikt}` with eigenvalues `1/|k|` (and `1` on constants), plus a
//! smooth remainder `C` that is discretized by periodic trapezoidal
//! quadrature. On that representation the crate provides three projection
//! solvers — least squares, dual least squares, and Bubnov-Galerkin — together
//! with an experiment harness that measures convergence rates under noise and
//! the first-order divergence of the discrete solution norm for rough data.
//!
//! All function spaces are the periodic Sobolev scale `H^r(0, 2π)` with the
//! `1/(2π)`-weighted inner product, so `{e^{ikt}}` is orthonormal in `H⁰` and
//! every norm is a weighted coefficient `ℓ²` norm.

pub mod curve;
pub mod fourier;
pub mod harness;
pub mod operator;
pub mod solvers;

pub use curve::{BoundaryCurve, DiagonalDerivatives, RegularityReport};
pub use fourier::FourierVector;
pub use harness::{ExperimentRecord, NRule, RhsSpec, SweepResult, ValueKind};
pub use operator::OperatorAssembly;
pub use solvers::{MethodKind, SolveReport};

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A curve parameter or sampled speed violates the standing assumptions.
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    /// Derivative order outside the supported range 0..=3.
    #[error("derivative order must be between 0 and 3, got {0}")]
    DerivativeOrder(u32),
    /// Too few samples to resolve the requested coefficient window.
    #[error("aliasing: recovering coefficients up to degree {max_index} needs at least {} samples, got {m}", 2 * max_index + 1)]
    Aliasing { m: usize, max_index: usize },
    /// Quadrature grid below the anti-aliasing margin for assembly.
    #[error("quadrature grid too small: the anti-aliasing rule requires m >= 2(2M+1) = {} for M = {max_index}, got m = {m}", 2 * (2 * max_index + 1))]
    QuadratureGrid { m: usize, max_index: usize },
    /// A vector of higher degree than the assembly window was supplied.
    #[error("truncation: vector of degree {degree} exceeds the assembly window M = {max_index}")]
    Truncation { degree: usize, max_index: usize },
    /// A linear system was numerically singular.
    #[error("numerically singular system: condition estimate {condition:.3e} exceeds cutoff {cutoff:.1e}")]
    SingularSystem { condition: f64, cutoff: f64 },
    /// A scalar argument fell outside its mathematical domain.
    #[error("{0}")]
    Domain(String),
    /// Not enough usable data points for a fit or sweep.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
