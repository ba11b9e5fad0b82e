use faer::prelude::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use symm_core::fourier::{sobolev_inner, sobolev_norm};
use symm_core::operator::{apply_k, assemble_operator};
use symm_core::solvers::{solve, solve_bg, solve_dls, solve_ls, stability_sigma};
use symm_core::{BoundaryCurve, Error, FourierVector, MethodKind, OperatorAssembly};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn disc_assembly(max_index: usize) -> OperatorAssembly {
    let curve = BoundaryCurve::disc((-0.5f64).exp()).unwrap();
    assemble_operator(&curve, max_index, 4 * (2 * max_index + 1)).unwrap()
}

fn ellipse_assembly(max_index: usize) -> OperatorAssembly {
    let curve = BoundaryCurve::ellipse(2.0, 1.0).unwrap();
    assemble_operator(&curve, max_index, 4 * (2 * max_index + 1)).unwrap()
}

fn single(max_index: usize, k: i64, value: Complex64) -> FourierVector {
    let mut v = FourierVector::zeros(max_index);
    v.set_coeff(k, value);
    v
}

fn max_coeff_diff(a: &FourierVector, b: &FourierVector) -> f64 {
    let m = a.max_index().max(b.max_index()) as i64;
    (-m..=m).map(|k| (a.coeff(k) - b.coeff(k)).norm()).fold(0.0, f64::max)
}

fn random_vector(rng: &mut ChaCha12Rng, max_index: usize) -> FourierVector {
    FourierVector::from_fn(max_index, |_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

#[test]
fn bg_inverts_the_disc_eigenvalues() {
    let assembly = disc_assembly(64);
    let b = FourierVector::from_fn(6, |k| {
        if k == 0 {
            c(1.0, 0.0)
        } else {
            c(1.0 / k.unsigned_abs() as f64, 0.0)
        }
    });
    let report = solve_bg(&assembly, &b, 6).unwrap();
    assert_eq!(report.method, MethodKind::Bg);
    assert_eq!(report.n, 6);
    let ones = FourierVector::from_fn(6, |_| c(1.0, 0.0));
    assert!(max_coeff_diff(&report.solution, &ones) <= 1e-10);
    assert!(report.condition_estimate >= 1.0);
}

#[test]
fn bg_recovers_the_power_tail_solution_on_the_disc() {
    let assembly = disc_assembly(64);
    let alpha = 0.25;
    let b = FourierVector::from_fn(64, |k| {
        if k == 0 {
            c(1.0, 0.0)
        } else {
            c((k.unsigned_abs() as f64).powf(-(0.5 + alpha)), 0.0)
        }
    });
    let report = solve_bg(&assembly, &b, 8).unwrap();
    for k in -8i64..=8 {
        let want = if k == 0 { 1.0 } else { (k.unsigned_abs() as f64).powf(0.5 - alpha) };
        assert!(
            (report.solution.coeff(k) - c(want, 0.0)).norm() <= 1e-10,
            "coefficient {k}: {:?} vs {want}",
            report.solution.coeff(k)
        );
    }
}

#[test]
fn bg_is_consistent_for_a_resolved_mode_on_the_ellipse() {
    let assembly = ellipse_assembly(16);
    let b = apply_k(&assembly, &single(1, 1, c(1.0, 0.0))).unwrap();
    for n in [1usize, 2, 4] {
        let report = solve_bg(&assembly, &b, n).unwrap();
        let want = single(n, 1, c(1.0, 0.0));
        assert!(max_coeff_diff(&report.solution, &want) <= 1e-6, "n = {n}");
    }
}

#[test]
fn the_three_methods_coincide_on_the_disc() {
    let assembly = disc_assembly(64);
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    for n in [2usize, 5] {
        for _ in 0..3 {
            let b = random_vector(&mut rng, 64);
            let ls = solve_ls(&assembly, &b, n).unwrap();
            let dls = solve_dls(&assembly, &b, n).unwrap();
            let bg = solve_bg(&assembly, &b, n).unwrap();
            assert!(max_coeff_diff(&ls.solution, &bg.solution) <= 1e-10);
            assert!(max_coeff_diff(&dls.solution, &bg.solution) <= 1e-10);
        }
    }
}

#[test]
fn ls_solves_consistent_systems_exactly() {
    let assembly = ellipse_assembly(32);
    let v = FourierVector::from_fn(3, |k| c(0.4 * k as f64 + 1.0, 0.2 - 0.1 * k as f64));
    let b = apply_k(&assembly, &v).unwrap();
    let report = solve_ls(&assembly, &b, 3).unwrap();
    assert!(max_coeff_diff(&report.solution, &v) <= 1e-10);
    assert!(report.residual_norm <= 1e-10);
}

/// Complex modified Gram-Schmidt; returns an orthonormal basis of the span.
fn orthonormalize(mut basis: Vec<Vec<Complex64>>) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    for v in basis.iter_mut() {
        for q in &out {
            let coef: Complex64 = v.iter().zip(q).map(|(&a, &b)| a * b.conj()).sum();
            for (x, &qx) in v.iter_mut().zip(q) {
                *x -= coef * qx;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-13 {
            out.push(v.iter().map(|&x| x / norm).collect());
        }
    }
    out
}

#[test]
fn ls_residual_equals_the_unresolvable_tail() {
    let assembly = ellipse_assembly(32);
    let n = 2usize;
    let b = apply_k(&assembly, &single(1, 1, c(1.0, 0.0)))
        .unwrap()
        .add(&single(5, 5, c(0.1, 0.0)));
    let report = solve_ls(&assembly, &b, n).unwrap();

    // Dense oracle: distance from b to span{K e_k : |k| ≤ 2}.
    let len = 2 * assembly.max_index() + 1;
    let to_dense = |v: &FourierVector| -> Vec<Complex64> {
        let m = assembly.max_index() as i64;
        (-m..=m).map(|k| v.coeff(k)).collect()
    };
    let basis = orthonormalize(
        (-(n as i64)..=n as i64).map(|k| to_dense(assembly.column(k))).collect(),
    );
    let bd = to_dense(&b);
    let mut residual = bd.clone();
    for q in &basis {
        let coef: Complex64 = bd.iter().zip(q).map(|(&a, &b)| a * b.conj()).sum();
        for i in 0..len {
            residual[i] -= coef * q[i];
        }
    }
    let oracle = residual.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();

    assert!((report.residual_norm - oracle).abs() <= 1e-8);
    // On this curve K e_k only excites modes ±k, so the e⁵ tail is exactly
    // orthogonal to the resolved image space and survives whole.
    assert!((oracle - 0.1).abs() <= 1e-6, "oracle residual {oracle}");
    assert!(max_coeff_diff(&report.solution, &single(n, 1, c(1.0, 0.0))) <= 1e-8);
}

#[test]
fn ls_residual_is_orthogonal_to_the_image_space() {
    let assembly = ellipse_assembly(32);
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let b = random_vector(&mut rng, 32);
    let report = solve_ls(&assembly, &b, 4).unwrap();
    let r = apply_k(&assembly, &report.solution).unwrap().sub(&b);
    for k in -4i64..=4 {
        let inner = sobolev_inner(&r, assembly.column(k), 0.0);
        assert!(inner.norm() <= 1e-10, "⟨r, K e_{k}⟩ = {inner}");
    }
}

#[test]
fn dls_of_zero_is_zero() {
    let assembly = ellipse_assembly(16);
    let report = solve_dls(&assembly, &FourierVector::zeros(16), 4).unwrap();
    assert_eq!(sobolev_norm(&report.solution, 0.0), 0.0);
    assert_eq!(report.residual_norm, 0.0);
}

#[test]
fn dls_solution_is_stored_in_the_ambient_degree() {
    let assembly = ellipse_assembly(16);
    let b = apply_k(&assembly, &single(1, 1, c(1.0, 0.0))).unwrap();
    let dls = solve_dls(&assembly, &b, 2).unwrap();
    assert_eq!(dls.solution.max_index(), 16);
    let bg = solve_bg(&assembly, &b, 2).unwrap();
    assert_eq!(bg.solution.max_index(), 2);
    let ls = solve_ls(&assembly, &b, 2).unwrap();
    assert_eq!(ls.solution.max_index(), 2);
}

#[test]
fn dls_error_is_within_twice_the_best_approximation() {
    let assembly = ellipse_assembly(32);
    let n = 8usize;
    let exact = single(2, 1, c(1.0, 0.0)).add(&single(2, -2, c(1.0, 0.0)));
    let b = apply_k(&assembly, &exact).unwrap();
    let report = solve_dls(&assembly, &b, n).unwrap();
    let err = sobolev_norm(&report.solution.sub(&exact), -1.0);

    // Best H⁻¹ approximation of the exact solution from span{K e_j : |j| ≤ n},
    // via a weighted least-squares oracle with weights (1+j²)^{-1/2}.
    let rows = 2 * assembly.max_index() + 1;
    let m = assembly.max_index() as i64;
    let w = |j: i64| (1.0 + (j * j) as f64).powf(-0.5);
    let t = Mat::from_fn(rows, 2 * n + 1, |r, q| {
        let j = r as i64 - m;
        let k = q as i64 - n as i64;
        let v = assembly.column(k).coeff(j) * w(j);
        faer::c64::new(v.re, v.im)
    });
    let rhs = Mat::from_fn(rows, 1, |r, _| {
        let j = r as i64 - m;
        let v = exact.coeff(j) * w(j);
        faer::c64::new(v.re, v.im)
    });
    let sol = t.col_piv_qr().solve_lstsq(&rhs);
    let best = (&t * &sol - &rhs).norm_l2();

    assert!(err <= 2.0 * best + 1e-12, "err {err} vs best {best}");
}

#[test]
fn bg_is_quasi_optimal_for_resolved_solutions() {
    let assembly = ellipse_assembly(64);
    let v = FourierVector::from_fn(5, |_| c(1.0, 0.0));
    let b = apply_k(&assembly, &v).unwrap();
    let report = solve_bg(&assembly, &b, 5).unwrap();
    assert!(sobolev_norm(&report.solution.sub(&v), 0.0) <= 1e-8);
}

#[test]
fn stability_sigma_equals_n_on_the_disc() {
    let assembly = disc_assembly(64);
    assert!((stability_sigma(&assembly, 0).unwrap() - 1.0).abs() <= 1e-12);
    for n in [4usize, 16] {
        let sigma = stability_sigma(&assembly, n).unwrap();
        assert!((sigma - n as f64).abs() <= 1e-10, "σ_{n} = {sigma}");
    }
}

#[test]
fn stability_sigma_stays_proportional_to_n_on_the_ellipse() {
    let assembly = ellipse_assembly(64);
    for n in [4usize, 8, 16] {
        let ratio = stability_sigma(&assembly, n).unwrap() / n as f64;
        // Closed form for this curve: σ_n/n = 1/(1 - 3^{-n}).
        let want = 1.0 / (1.0 - 3f64.powi(-(n as i32)));
        assert!((ratio - want).abs() <= 1e-6, "n = {n}: ratio {ratio} vs {want}");
        assert!(ratio >= 1.0 - 1e-9 && ratio <= 2.0);
    }
}

#[test]
fn the_unit_disc_is_reported_singular() {
    let curve = BoundaryCurve::disc(1.0).unwrap();
    let assembly = assemble_operator(&curve, 8, 68).unwrap();
    let b = single(2, 1, c(1.0, 0.0));
    for method in [MethodKind::Ls, MethodKind::Dls, MethodKind::Bg] {
        match solve(method, &assembly, &b, 2) {
            Err(Error::SingularSystem { condition, cutoff }) => {
                assert!(condition > cutoff);
            }
            other => panic!("{method}: expected singular-system error, got {other:?}"),
        }
    }
}

#[test]
fn window_margins_are_enforced() {
    let assembly = disc_assembly(64);
    assert!(matches!(solve_ls(&assembly, &FourierVector::zeros(4), 17), Err(Error::Domain(_))));
    assert!(matches!(solve_dls(&assembly, &FourierVector::zeros(4), 17), Err(Error::Domain(_))));
    assert!(matches!(stability_sigma(&assembly, 17), Err(Error::Domain(_))));
    // BG allows the window right up to the ambient degree, but not beyond.
    assert!(solve_bg(&assembly, &FourierVector::zeros(4), 64).is_ok());
    assert!(matches!(solve_bg(&assembly, &FourierVector::zeros(4), 65), Err(Error::Domain(_))));
    // Right-hand sides beyond the stored window are refused.
    assert!(matches!(
        solve_bg(&assembly, &FourierVector::zeros(65), 4),
        Err(Error::Truncation { .. })
    ));
}

#[test]
fn report_serializes_to_the_documented_shape() {
    let assembly = disc_assembly(64);
    let report = solve_bg(&assembly, &single(1, 1, c(1.0, 0.0)), 1).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["method"], "BG");
    assert_eq!(json["n"], 1);
    assert!(json["residual_norm"].is_number());
    assert!(json["condition_estimate"].is_number());
    assert!(json["solution"]["re"].is_array());
}

#[test]
fn method_kind_parses_and_serializes() {
    assert_eq!("LS".parse::<MethodKind>().unwrap(), MethodKind::Ls);
    assert_eq!("DLS".parse::<MethodKind>().unwrap(), MethodKind::Dls);
    assert_eq!("BG".parse::<MethodKind>().unwrap(), MethodKind::Bg);
    assert!("bg".parse::<MethodKind>().is_err());
    assert_eq!(serde_json::to_value(MethodKind::Dls).unwrap(), "DLS");
    assert_eq!(serde_json::from_str::<MethodKind>("\"BG\"").unwrap(), MethodKind::Bg);
}
