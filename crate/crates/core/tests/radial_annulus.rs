use std::f64::consts::PI;

use specflow_core::problem::FlowProblem;
use specflow_core::radial::{spectrum_at, ShootingOptions};
use specflow_core::specflow::{run_flow, FlowOptions, SolverSettings};

/// `{t - k}` together with `±√((k - t)² + (πl)²)`, `l ≥ 1`, inside `[-window, window]`.
fn closed_form(t: f64, window: f64) -> Vec<f64> {
    let mut v = Vec::new();
    for k in -20i64..=20 {
        let s = t - k as f64;
        if s.abs() <= window {
            v.push(s);
        }
        for l in 1..10 {
            let r = (s * s + (PI * l as f64).powi(2)).sqrt();
            if r <= window {
                v.push(r);
                v.push(-r);
            }
        }
    }
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn shooting_matches_closed_form_on_the_t_grid() {
    let p = FlowProblem::annulus_example();
    let opts = ShootingOptions::default();
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let got = spectrum_at(&p, t, 3.5, &opts).unwrap().values();
        let want = closed_form(t, 3.5);
        assert_eq!(got.len(), want.len(), "t = {t}: {got:?}");
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-8, "t = {t}: {g} vs {w}");
        }
    }
}

#[test]
fn second_family_starts_at_pi() {
    let p = FlowProblem::annulus_example();
    let s = spectrum_at(&p, 0.0, 3.2, &ShootingOptions::default()).unwrap().values();
    let beyond: Vec<f64> = s.iter().copied().filter(|v| v.abs() > 3.05).collect();
    assert_eq!(beyond.len(), 2);
    assert!((beyond[0] + PI).abs() < 1e-8 && (beyond[1] - PI).abs() < 1e-8);
}

fn radial_flow(w: i64, b_in: f64, b_out: f64) -> (i64, Option<i64>, Option<i64>) {
    let p = FlowProblem::polar_annulus(1.0, 2.0, w, b_in, b_out).unwrap();
    let r = run_flow(&p, &SolverSettings::Radial(ShootingOptions::default()), &FlowOptions::default()).unwrap().result;
    (r.sf_crossings, r.sf_shift, r.predicted)
}

#[test]
fn unit_winding_flow_is_one() {
    assert_eq!(radial_flow(1, 1.0, -1.0), (1, Some(1), Some(1)));
}

#[test]
fn negative_inner_boundary_reverses_the_flow() {
    assert_eq!(radial_flow(1, -1.0, 1.0), (-1, Some(-1), Some(-1)));
}

#[test]
fn winding_three_gives_three() {
    assert_eq!(radial_flow(3, 1.0, -1.0).0, 3);
}

#[test]
fn same_sign_boundary_has_no_flow() {
    assert_eq!(radial_flow(2, 1.0, 1.0).0, 0);
    assert_eq!(radial_flow(2, -1.0, -1.0).0, 0);
}

#[test]
fn partial_interval_has_no_prediction() {
    let p = FlowProblem::annulus_example();
    let opts = FlowOptions { t_end: 0.5, t_points: 6, ..Default::default() };
    let r = run_flow(&p, &SolverSettings::Radial(ShootingOptions::default()), &opts).unwrap().result;
    assert_eq!(r.predicted, None);
    // λ = t starts at 0, above the counting level -ε; λ = t - 1 reaches it only at t = 1.
    assert_eq!(r.sf_crossings, 0);
}
