//! Browser bindings for the boundary-integral demos.
//!
//! Every export is a thin wrapper: parse JSON inputs, call into `symm-core`,
//! serialize the result to a JSON string. Failures come back as
//! `{"error": "..."}` instead of a thrown exception, so the page can display
//! them inline.

use std::f64::consts::TAU;

use wasm_bindgen::prelude::*;

use symm_core::curve::smooth_kernel;
use symm_core::fourier::eval_fourier;
use symm_core::harness::{fit_rate, make_rhs, run_divergence, RateAxis, RhsConfig};
use symm_core::operator::{assemble_operator, default_grid, default_max_index};
use symm_core::solvers::solve;
use symm_core::{BoundaryCurve, MethodKind};

/// Largest heatmap sampling grid the page may request.
const MAX_HEATMAP_GRID: usize = 256;
/// Largest window degree the interactive solves accept.
const MAX_WINDOW: usize = 32;

fn err_json(message: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": message.to_string() }).to_string()
}

fn parse_curve(curve_json: &str) -> Result<BoundaryCurve, String> {
    let curve: BoundaryCurve =
        serde_json::from_str(curve_json).map_err(|e| format!("curve: {e}"))?;
    curve.validate().map_err(|e| e.to_string())?;
    Ok(curve)
}

fn parse_method(method: &str) -> Result<MethodKind, String> {
    method.parse::<MethodKind>().map_err(|e| e.to_string())
}

/// Samples the smooth remainder kernel `k(t,s)` on a `grid × grid` mesh of
/// `[0,2π)²` and returns `{"grid", "min", "max", "values"}` (row-major in `t`).
#[wasm_bindgen]
pub fn kernel_heatmap(curve_json: &str, grid: usize) -> String {
    match kernel_heatmap_impl(curve_json, grid) {
        Ok(json) => json,
        Err(message) => err_json(message),
    }
}

fn kernel_heatmap_impl(curve_json: &str, grid: usize) -> Result<String, String> {
    if grid < 2 || grid > MAX_HEATMAP_GRID {
        return Err(format!("grid must lie in 2..={MAX_HEATMAP_GRID}, got {grid}"));
    }
    let curve = parse_curve(curve_json)?;
    let mut values = Vec::with_capacity(grid * grid);
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in 0..grid {
        let t = TAU * i as f64 / grid as f64;
        for j in 0..grid {
            let s = TAU * j as f64 / grid as f64;
            let v = smooth_kernel(&curve, t, s);
            min = min.min(v);
            max = max.max(v);
            values.push(v);
        }
    }
    Ok(serde_json::json!({ "grid": grid, "min": min, "max": max, "values": values }).to_string())
}

/// Solves one window system and returns the report plus density samples:
/// `{"method", "n", "residual_norm", "condition_estimate", "solution_re",
/// "solution_im", "density"}` with `density` holding `Re Ψ(t)` on a uniform
/// 256-point grid.
#[wasm_bindgen]
pub fn solve_density(curve_json: &str, rhs_json: &str, method: &str, n: usize) -> String {
    match solve_density_impl(curve_json, rhs_json, method, n) {
        Ok(json) => json,
        Err(message) => err_json(message),
    }
}

fn solve_density_impl(
    curve_json: &str,
    rhs_json: &str,
    method: &str,
    n: usize,
) -> Result<String, String> {
    if n == 0 || n > MAX_WINDOW {
        return Err(format!("window degree n must lie in 1..={MAX_WINDOW}, got {n}"));
    }
    let curve = parse_curve(curve_json)?;
    let method = parse_method(method)?;
    let rhs: RhsConfig =
        serde_json::from_str(rhs_json).map_err(|e| format!("rhs: {e}"))?;

    let max_index = default_max_index(n);
    let assembly = assemble_operator(&curve, max_index, default_grid(max_index))
        .map_err(|e| e.to_string())?;
    let spec = rhs.into_spec(max_index).map_err(|e| e.to_string())?;
    let b = make_rhs(&assembly, &spec).map_err(|e| e.to_string())?;
    let report = solve(method, &assembly, &b, n).map_err(|e| e.to_string())?;

    let density: Vec<f64> = (0..256)
        .map(|i| eval_fourier(&report.solution, TAU * i as f64 / 256.0).re)
        .collect();
    let (re, im): (Vec<f64>, Vec<f64>) =
        report.solution.coeffs().iter().map(|z| (z.re, z.im)).unzip();
    Ok(serde_json::json!({
        "method": report.method.to_string(),
        "n": report.n,
        "residual_norm": report.residual_norm,
        "condition_estimate": report.condition_estimate,
        "solution_re": re,
        "solution_im": im,
        "density": density,
    })
    .to_string())
}

/// Runs a power-tail divergence sweep over window degrees `2, 4, 8, …` up to
/// `n_max` and returns `{"method", "alpha", "n", "norm", "slope"}` where
/// `norm[i]` is the `H⁰` norm of the degree-`n[i]` solution.
#[wasm_bindgen]
pub fn divergence_sweep(curve_json: &str, method: &str, alpha: f64, n_max: usize) -> String {
    match divergence_sweep_impl(curve_json, method, alpha, n_max) {
        Ok(json) => json,
        Err(message) => err_json(message),
    }
}

fn divergence_sweep_impl(
    curve_json: &str,
    method: &str,
    alpha: f64,
    n_max: usize,
) -> Result<String, String> {
    if n_max < 2 || n_max > MAX_WINDOW {
        return Err(format!("n_max must lie in 2..={MAX_WINDOW}, got {n_max}"));
    }
    let curve = parse_curve(curve_json)?;
    let method = parse_method(method)?;

    let mut ns: Vec<usize> = std::iter::successors(Some(2usize), |n| Some(n * 2))
        .take_while(|&n| n <= n_max)
        .collect();
    if *ns.last().unwrap() != n_max {
        ns.push(n_max);
    }

    let sweep = run_divergence(&curve, method, alpha, &ns).map_err(|e| e.to_string())?;
    if let Some(failure) = sweep.failures.first() {
        return Err(format!("window n = {}: {}", failure.n, failure.message));
    }
    let slope = fit_rate(&sweep.records, RateAxis::N).ok().map(|f| f.slope);
    let (n, norm): (Vec<usize>, Vec<f64>) =
        sweep.records.iter().map(|rec| (rec.n, rec.value)).unzip();
    Ok(serde_json::json!({
        "method": method.to_string(),
        "alpha": alpha,
        "n": n,
        "norm": norm,
        "slope": slope,
    })
    .to_string())
}
