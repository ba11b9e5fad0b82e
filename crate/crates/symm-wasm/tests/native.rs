//! The bindings are plain functions on native targets, so the JSON contracts
//! can be tested without a browser.

use serde_json::Value;
use symm_wasm::{divergence_sweep, kernel_heatmap, solve_density};

fn disc_json() -> String {
    format!(r#"{{"kind":"disc","radius":{}}}"#, (-0.5f64).exp())
}

const ELLIPSE_JSON: &str = r#"{"kind":"ellipse","ax":2.0,"ay":1.0}"#;

fn parse(json: &str) -> Value {
    serde_json::from_str(json).unwrap()
}

#[test]
fn heatmap_is_symmetric_on_the_ellipse() {
    let out = parse(&kernel_heatmap(ELLIPSE_JSON, 16));
    assert!(out.get("error").is_none(), "unexpected error: {out}");
    assert_eq!(out["grid"], 16);
    let values = out["values"].as_array().unwrap();
    assert_eq!(values.len(), 256);
    for i in 0..16 {
        for j in 0..16 {
            let a = values[i * 16 + j].as_f64().unwrap();
            let b = values[j * 16 + i].as_f64().unwrap();
            assert!((a - b).abs() <= 1e-12, "asymmetry at ({i},{j}): {a} vs {b}");
        }
    }
    assert!(out["min"].as_f64().unwrap() <= out["max"].as_f64().unwrap());
}

#[test]
fn heatmap_vanishes_on_the_reference_disc() {
    let out = parse(&kernel_heatmap(&disc_json(), 8));
    for v in out["values"].as_array().unwrap() {
        assert!(v.as_f64().unwrap().abs() <= 1e-12);
    }
}

#[test]
fn heatmap_rejects_bad_inputs() {
    let bad_kind = parse(&kernel_heatmap(r#"{"kind":"dsc","radius":1.0}"#, 16));
    assert!(bad_kind["error"].as_str().unwrap().contains("dsc"));

    let too_big = parse(&kernel_heatmap(ELLIPSE_JSON, 257));
    assert!(too_big["error"].as_str().unwrap().contains("grid"));
}

#[test]
fn solve_density_recovers_the_power_tail_window() {
    let out = parse(&solve_density(
        &disc_json(),
        r#"{"kind":"power_tail","alpha":0.25}"#,
        "BG",
        4,
    ));
    assert!(out.get("error").is_none(), "unexpected error: {out}");
    assert_eq!(out["method"], "BG");
    assert_eq!(out["n"], 4);
    let re = out["solution_re"].as_array().unwrap();
    assert_eq!(re.len(), 9);
    for k in -4i64..=4 {
        let want = (k.abs().max(1) as f64).powf(0.25);
        let got = re[(k + 4) as usize].as_f64().unwrap();
        assert!((got - want).abs() <= 1e-10, "coefficient {k}: {got} vs {want}");
    }
    let density = out["density"].as_array().unwrap();
    assert_eq!(density.len(), 256);
    let at_zero: f64 = re.iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((density[0].as_f64().unwrap() - at_zero).abs() <= 1e-10);
}

#[test]
fn solve_density_reports_failures_as_json() {
    let out = parse(&solve_density(
        r#"{"kind":"disc","radius":1.0}"#,
        r#"{"kind":"power_tail","alpha":0.25}"#,
        "BG",
        4,
    ));
    assert!(out["error"].as_str().unwrap().contains("singular"), "got {out}");

    let out = parse(&solve_density(
        &disc_json(),
        r#"{"kind":"power_tail","alpha":0.25}"#,
        "BG",
        33,
    ));
    assert!(out["error"].as_str().unwrap().contains("n must lie"), "got {out}");

    let out = parse(&solve_density(
        &disc_json(),
        r#"{"kind":"power_tail","alpha":0.25}"#,
        "QR",
        4,
    ));
    assert!(out["error"].as_str().unwrap().contains("QR"), "got {out}");
}

#[test]
fn divergence_sweep_matches_the_closed_form_norms() {
    let out = parse(&divergence_sweep(&disc_json(), "BG", 0.25, 16));
    assert!(out.get("error").is_none(), "unexpected error: {out}");
    let ns = out["n"].as_array().unwrap();
    assert_eq!(
        ns.iter().map(|v| v.as_u64().unwrap()).collect::<Vec<_>>(),
        vec![2, 4, 8, 16]
    );
    let norms = out["norm"].as_array().unwrap();
    let mut previous = 0.0;
    for (n_val, norm) in ns.iter().zip(norms) {
        let n = n_val.as_u64().unwrap() as usize;
        let got = norm.as_f64().unwrap();
        let want =
            (1.0 + 2.0 * (1..=n).map(|k| (k as f64).sqrt()).sum::<f64>()).sqrt();
        assert!((got - want).abs() <= 1e-10 * want, "n = {n}: {got} vs {want}");
        assert!(got > previous, "norms should grow");
        previous = got;
    }
    let slope = out["slope"].as_f64().unwrap();
    assert!((0.5..1.0).contains(&slope), "slope {slope}");
}

#[test]
fn divergence_sweep_rejects_a_bad_exponent() {
    let out = parse(&divergence_sweep(&disc_json(), "BG", 0.6, 16));
    assert!(out["error"].as_str().unwrap().contains("exponent"), "got {out}");
}
