//! Experiment drivers: synthetic right-hand sides, exact-norm noise,
//! convergence and divergence sweeps, and log-log rate fits.
//!
//! The central synthetic datum is the power-tail series
//! `b(t) = 1 + Σ_{0<|k|≤M} |k|^{-(1/2+α)} e^{ikt}` with `α ∈ (0, 1/2)`: it
//! lies in `H⁰` but not in `H¹`, and on the reference disc the exact window
//! solutions have `‖Ψ_n‖²_{H⁰} = 1 + 2 Σ_{k=1}^n k^{1-2α}`, which grows like
//! `n^{1-α}` — the first-order divergence the sweeps measure.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::curve::BoundaryCurve;
use crate::fourier::{self, FourierVector};
use crate::operator::{self, apply_k, OperatorAssembly};
use crate::solvers::{self, MethodKind};
use crate::{Error, Result};

/// Synthetic right-hand-side specification.
#[derive(Clone, Debug)]
pub enum RhsSpec {
    /// `b = K(solution)` for a known solution; the only kind usable in
    /// convergence studies, since errors are measured against `solution`.
    SmoothManufactured { solution: FourierVector },
    /// The power-tail series truncated at `max_index`.
    PowerTail { alpha: f64, max_index: usize },
    /// Explicit coefficients.
    CustomCoeffs { coeffs: FourierVector },
}

/// File-format shape of a right-hand-side choice, shared by the CLI and the
/// browser demo. `into_spec` resolves it against the ambient degree `M`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhsConfig {
    /// Power-tail data at the ambient degree.
    PowerTail { alpha: f64 },
    /// Manufactured solution with all coefficients 1 up to `degree`.
    Manufactured { degree: usize },
    /// Manufactured solution with coefficients `(1+k²)^{-p/2}` up to the
    /// ambient degree.
    ManufacturedDecay { p: f64 },
    /// Explicit coefficient arrays, `re`/`im` of length `2·max_index+1`.
    Custom { max_index: usize, re: Vec<f64>, im: Vec<f64> },
}

impl RhsConfig {
    pub fn into_spec(&self, ambient_max_index: usize) -> Result<RhsSpec> {
        Ok(match self {
            RhsConfig::PowerTail { alpha } => {
                RhsSpec::PowerTail { alpha: *alpha, max_index: ambient_max_index }
            }
            RhsConfig::Manufactured { degree } => {
                RhsSpec::SmoothManufactured { solution: manufactured_ones(*degree) }
            }
            RhsConfig::ManufacturedDecay { p } => {
                RhsSpec::SmoothManufactured { solution: decay_solution(ambient_max_index, *p) }
            }
            RhsConfig::Custom { max_index, re, im } => {
                let want = 2 * max_index + 1;
                if re.len() != want || im.len() != want {
                    return Err(Error::Domain(format!(
                        "custom rhs of degree {max_index} needs {want} re/im entries, got {}/{}",
                        re.len(),
                        im.len()
                    )));
                }
                let coeffs =
                    re.iter().zip(im).map(|(&re, &im)| Complex64::new(re, im)).collect();
                RhsSpec::CustomCoeffs { coeffs: FourierVector::from_coeffs(*max_index, coeffs)? }
            }
        })
    }
}

/// The all-ones manufactured solution of degree `d`.
pub fn manufactured_ones(degree: usize) -> FourierVector {
    FourierVector::from_fn(degree, |_| Complex64::new(1.0, 0.0))
}

/// Manufactured solution with power-decay coefficients `(1+k²)^{-p/2}`.
pub fn decay_solution(max_index: usize, p: f64) -> FourierVector {
    FourierVector::from_fn(max_index, |k| {
        Complex64::new((1.0 + (k * k) as f64).powf(-p / 2.0), 0.0)
    })
}

/// One measured value of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentRecord {
    pub method: MethodKind,
    pub n: usize,
    pub delta: f64,
    pub value: f64,
    pub value_kind: ValueKind,
    pub seed: u64,
}

/// What `value` measures, against the known solution where applicable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ValueKind {
    ErrorH0,
    ErrorHneg1,
    ErrorHneghalf,
    SolutionNormH0,
}

impl std::fmt::Display for ValueKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ValueKind::ErrorH0 => "ErrorH0",
            ValueKind::ErrorHneg1 => "ErrorHneg1",
            ValueKind::ErrorHneghalf => "ErrorHneghalf",
            ValueKind::SolutionNormH0 => "SolutionNormH0",
        })
    }
}

/// A solver failure inside a sweep; recorded per row, never fatal.
#[derive(Clone, Debug, Serialize)]
pub struct SweepFailure {
    pub method: MethodKind,
    pub n: usize,
    pub delta: f64,
    pub seed: u64,
    pub message: String,
}

/// Records plus per-row failures, deterministically ordered by
/// `(method, n, delta, seed, value_kind)`.
#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub records: Vec<ExperimentRecord>,
    pub failures: Vec<SweepFailure>,
}

/// Window-degree rule for convergence sweeps.
#[derive(Clone, Debug)]
pub enum NRule {
    /// Sweep every listed degree at every noise level.
    Fixed(Vec<usize>),
    /// The a-priori choice `n = round(δ^{-1/(r+1)})` for declared solution
    /// regularity `r ∈ (0, 2]`.
    OptimalFromDelta { r: f64 },
}

/// Builds the right-hand side described by `spec` against `assembly`.
pub fn make_rhs(assembly: &OperatorAssembly, spec: &RhsSpec) -> Result<FourierVector> {
    match spec {
        RhsSpec::SmoothManufactured { solution } => apply_k(assembly, solution),
        RhsSpec::PowerTail { alpha, max_index } => {
            power_tail_vector(*alpha, *max_index, assembly.max_index())
        }
        RhsSpec::CustomCoeffs { coeffs } => {
            if coeffs.max_index() > assembly.max_index() {
                return Err(Error::Truncation {
                    degree: coeffs.max_index(),
                    max_index: assembly.max_index(),
                });
            }
            Ok(coeffs.clone())
        }
    }
}

fn power_tail_vector(alpha: f64, max_index: usize, ambient: usize) -> Result<FourierVector> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Domain(format!("power-tail exponent must lie in (0, 1/2), got {alpha}")));
    }
    if max_index > ambient {
        return Err(Error::Truncation { degree: max_index, max_index: ambient });
    }
    Ok(FourierVector::from_fn(max_index, |k| {
        if k == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new((k.unsigned_abs() as f64).powf(-(0.5 + alpha)), 0.0)
        }
    }))
}

/// Adds a real pseudo-random perturbation with `‖e‖_{H⁰} = delta` exactly;
/// deterministic in `seed`, and `delta = 0` returns `b` unchanged.
pub fn add_noise(b: &FourierVector, delta: f64, seed: u64) -> Result<FourierVector> {
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!("noise level must be nonnegative, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(b.clone());
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let cap = b.max_index();
    let raw = FourierVector::from_fn(cap, |_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    // Hermitian-symmetrize so the perturbation is a real function.
    let sym = FourierVector::from_fn(cap, |k| (raw.coeff(k) + raw.coeff(-k).conj()) * 0.5);
    let norm = fourier::sobolev_norm(&sym, 0.0);
    if norm == 0.0 {
        return Ok(b.clone());
    }
    Ok(b.add(&sym.scale(Complex64::new(delta / norm, 0.0))))
}

fn record_errors(
    method: MethodKind,
    n: usize,
    delta: f64,
    seed: u64,
    solution: &FourierVector,
    exact: &FourierVector,
    records: &mut Vec<ExperimentRecord>,
) {
    let diff = solution.sub(exact);
    let mut push = |value_kind, value| {
        records.push(ExperimentRecord { method, n, delta, value, value_kind, seed })
    };
    push(ValueKind::ErrorH0, fourier::sobolev_norm(&diff, 0.0));
    match method {
        MethodKind::Dls => push(ValueKind::ErrorHneg1, fourier::sobolev_norm(&diff, -1.0)),
        MethodKind::Bg => push(ValueKind::ErrorHneghalf, fourier::sobolev_norm(&diff, -0.5)),
        MethodKind::Ls => {}
    }
}

fn sort_records(records: &mut [ExperimentRecord]) {
    records.sort_by(|a, b| {
        (a.method, a.n)
            .cmp(&(b.method, b.n))
            .then(a.delta.total_cmp(&b.delta))
            .then(a.seed.cmp(&b.seed))
            .then(a.value_kind.cmp(&b.value_kind))
    });
}

/// Convergence sweep against a manufactured solution.
///
/// Assembles the operator once at `M = max(4·n_max, 64)` (grown to fit the
/// manufactured solution if needed, `m = 4(2M+1)`), then for every
/// `(seed, delta, n)` cell solves the noisy system and records the `H⁰` error
/// — plus the `H⁻¹` error for DLS and the `H^{-1/2}` error for BG, the norms
/// in which those methods converge for rough data.
pub fn run_convergence(
    curve: &BoundaryCurve,
    method: MethodKind,
    rhs: &RhsSpec,
    deltas: &[f64],
    n_rule: &NRule,
    seeds: &[u64],
) -> Result<SweepResult> {
    let RhsSpec::SmoothManufactured { solution: exact } = rhs else {
        return Err(Error::Domain(
            "convergence studies need a manufactured right-hand side with a known solution".into(),
        ));
    };
    if deltas.is_empty() {
        return Err(Error::InsufficientData("convergence sweep got an empty delta list".into()));
    }
    if seeds.is_empty() {
        return Err(Error::InsufficientData("convergence sweep got an empty seed list".into()));
    }

    // Resolve the cell grid (delta, n).
    let mut cells: Vec<(f64, usize)> = Vec::new();
    match n_rule {
        NRule::Fixed(ns) => {
            if ns.is_empty() {
                return Err(Error::InsufficientData("convergence sweep got an empty n list".into()));
            }
            for &delta in deltas {
                for &n in ns {
                    cells.push((delta, n));
                }
            }
        }
        NRule::OptimalFromDelta { r } => {
            if !(*r > 0.0 && *r <= 2.0) {
                return Err(Error::Domain(format!(
                    "declared solution regularity must lie in (0, 2], got {r}"
                )));
            }
            for &delta in deltas {
                if delta <= 0.0 {
                    return Err(Error::Domain(
                        "the a-priori degree rule n = round(δ^{-1/(r+1)}) needs positive deltas"
                            .into(),
                    ));
                }
                cells.push((delta, delta.powf(-1.0 / (r + 1.0)).round().max(1.0) as usize));
            }
        }
    }

    let n_max = cells.iter().map(|&(_, n)| n).max().unwrap();
    let max_index = operator::default_max_index(n_max).max(exact.max_index());
    let assembly =
        operator::assemble_operator(curve, max_index, operator::default_grid(max_index))?;
    let b = make_rhs(&assembly, rhs)?;

    let grid: Vec<(u64, f64, usize)> = seeds
        .iter()
        .flat_map(|&seed| cells.iter().map(move |&(delta, n)| (seed, delta, n)))
        .collect();

    let run_cell = |&(seed, delta, n): &(u64, f64, usize)| -> (Vec<ExperimentRecord>, Vec<SweepFailure>) {
        let mut records = Vec::new();
        let mut failures = Vec::new();
        match add_noise(&b, delta, seed)
            .and_then(|noisy| solvers::solve(method, &assembly, &noisy, n))
        {
            Ok(rep) => record_errors(method, n, delta, seed, &rep.solution, exact, &mut records),
            Err(e) => {
                failures.push(SweepFailure { method, n, delta, seed, message: e.to_string() })
            }
        }
        (records, failures)
    };

    #[cfg(feature = "parallel")]
    let per_cell: Vec<_> = {
        use rayon::prelude::*;
        grid.par_iter().map(run_cell).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_cell: Vec<_> = grid.iter().map(run_cell).collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in per_cell {
        records.extend(r);
        failures.extend(f);
    }
    sort_records(&mut records);
    Ok(SweepResult { records, failures })
}

/// Divergence sweep: power-tail data at `M = 4·max(n)`, recording the `H⁰`
/// solution norm for every window degree in `n_list`.
pub fn run_divergence(
    curve: &BoundaryCurve,
    method: MethodKind,
    alpha: f64,
    n_list: &[usize],
) -> Result<SweepResult> {
    let n_max = max_degree(n_list)?;
    let max_index = operator::default_max_index(n_max);
    let assembly =
        operator::assemble_operator(curve, max_index, operator::default_grid(max_index))?;
    run_divergence_with(&assembly, method, alpha, n_list)
}

/// Divergence sweep on an existing assembly, so several `alpha` values can
/// share one (expensive) operator. Requires `4·max(n_list) ≤ assembly.M`.
pub fn run_divergence_with(
    assembly: &OperatorAssembly,
    method: MethodKind,
    alpha: f64,
    n_list: &[usize],
) -> Result<SweepResult> {
    let n_max = max_degree(n_list)?;
    if 4 * n_max > assembly.max_index() {
        return Err(Error::Domain(format!(
            "divergence sweep to n = {n_max} needs assembly order M >= {}, got {}",
            4 * n_max,
            assembly.max_index()
        )));
    }
    let b = make_rhs(assembly, &RhsSpec::PowerTail { alpha, max_index: 4 * n_max })?;

    let run_cell = |&n: &usize| -> (Vec<ExperimentRecord>, Vec<SweepFailure>) {
        match solvers::solve(method, assembly, &b, n) {
            Ok(rep) => (
                vec![ExperimentRecord {
                    method,
                    n,
                    delta: 0.0,
                    value: fourier::sobolev_norm(&rep.solution, 0.0),
                    value_kind: ValueKind::SolutionNormH0,
                    seed: 0,
                }],
                Vec::new(),
            ),
            Err(e) => (
                Vec::new(),
                vec![SweepFailure { method, n, delta: 0.0, seed: 0, message: e.to_string() }],
            ),
        }
    };

    #[cfg(feature = "parallel")]
    let per_cell: Vec<_> = {
        use rayon::prelude::*;
        n_list.par_iter().map(run_cell).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_cell: Vec<_> = n_list.iter().map(run_cell).collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in per_cell {
        records.extend(r);
        failures.extend(f);
    }
    sort_records(&mut records);
    Ok(SweepResult { records, failures })
}

fn max_degree(n_list: &[usize]) -> Result<usize> {
    n_list
        .iter()
        .copied()
        .max()
        .ok_or_else(|| Error::InsufficientData("divergence sweep got an empty n list".into()))
}

/// Which record field supplies the x coordinate of a rate fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateAxis {
    N,
    Delta,
}

/// A fitted log-log rate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub r_squared: f64,
}

/// Ordinary least-squares line through `(log x, log value)`. Needs at least
/// three records with positive `x` and `value`.
pub fn fit_rate(records: &[ExperimentRecord], x_axis: RateAxis) -> Result<RateFit> {
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|rec| {
            let x = match x_axis {
                RateAxis::N => rec.n as f64,
                RateAxis::Delta => rec.delta,
            };
            (x > 0.0 && rec.value > 0.0 && rec.value.is_finite())
                .then(|| (x.ln(), rec.value.ln()))
        })
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "rate fit needs at least 3 usable records, got {}",
            points.len()
        )));
    }
    let count = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    let mut cov = 0.0;
    for &(x, y) in &points {
        var_x += (x - mean_x) * (x - mean_x);
        var_y += (y - mean_y) * (y - mean_y);
        cov += (x - mean_x) * (y - mean_y);
    }
    if var_x == 0.0 {
        return Err(Error::InsufficientData(
            "rate fit needs at least two distinct x values".into(),
        ));
    }
    let slope = cov / var_x;
    let r_squared = if var_y == 0.0 { 1.0 } else { cov * cov / (var_x * var_y) };
    Ok(RateFit { slope, r_squared })
}

/// Renders records as CSV with the fixed header
/// `method,n,delta,value_kind,value,seed`.
pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from("method,n,delta,value_kind,value,seed\n");
    for rec in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rec.method, rec.n, rec.delta, rec.value_kind, rec.value, rec.seed
        ));
    }
    out
}
