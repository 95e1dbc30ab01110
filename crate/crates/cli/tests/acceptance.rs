//! Acceptance gate. Prints one PASS/FAIL line per criterion and fails if any
//! hard criterion fails; criterion 8 is reported only.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use specflow_cli::{cmd_ab, cmd_probe_cm, RunConfig};
use specflow_core::boundary::{boundary_from_specs, ComponentBoundarySpec};
use specflow_core::fem2d::{FemOptions, FemSolver};
use specflow_core::problem::FlowProblem;
use specflow_core::radial::{spectrum_at, ShootingOptions};
use specflow_core::spectrum::SliceSolver;
use specflow_core::specflow::{property_suite, run_flow, FlowOptions, SolverSettings};

const EXACT_TOL: f64 = 1e-8;
const GAP_FLOOR: f64 = 0.05;
const BETA_TOL: f64 = 1e-12;
const EIGENSPACE_TOL: f64 = 1e-10;
const FEM_REL_TOL: f64 = 0.02;
const BUDGET_EXACT: Duration = Duration::from_secs(10);
const BUDGET_SWEEP: Duration = Duration::from_secs(120);
const BUDGET_FEM: Duration = Duration::from_secs(300);

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn radial() -> SolverSettings {
    SolverSettings::Radial(ShootingOptions::default())
}

/// `B = -1` where `b = 1`, `+1` where `b = 0`.
fn scalar_annulus(w: i64, b_in: usize, b_out: usize) -> FlowProblem {
    let value = |b: usize| if b == 1 { -1.0 } else { 1.0 };
    FlowProblem::polar_annulus(1.0, 2.0, w, value(b_in), value(b_out)).unwrap()
}

fn lambda1(t: f64) -> Vec<f64> {
    (-3..=2).map(|j| j as f64 + t).collect()
}

fn nearest(values: &[f64], x: f64) -> f64 {
    values.iter().map(|v| (v - x).abs()).fold(f64::INFINITY, f64::min)
}

fn exact_reproduction() -> Outcome {
    let start = Instant::now();
    let p = FlowProblem::annulus_example();
    let opts = ShootingOptions::default();
    let mut worst: f64 = 0.0;
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let values = spectrum_at(&p, t, 3.05, &opts).unwrap().values();
        for want in lambda1(t) {
            worst = worst.max(nearest(&values, want));
        }
    }
    let at_zero = spectrum_at(&p, 0.0, 3.2, &opts).unwrap().values();
    let onset: Vec<f64> = at_zero.iter().copied().filter(|v| v.abs() > 3.05).collect();
    let onset_err = if onset.len() == 2 { (onset[0] + PI).abs().max((onset[1] - PI).abs()) } else { f64::INFINITY };
    let r = run_flow(&p, &radial(), &FlowOptions::default()).unwrap().result;
    let elapsed = start.elapsed();
    check(
        worst <= EXACT_TOL && onset_err <= EXACT_TOL && r.sf_crossings == 1 && r.sf_shift == Some(1) && elapsed <= BUDGET_EXACT,
        format!(
            "max |Δλ| {worst:.1e}, onset error {onset_err:.1e}, sf {} shift {:?}, {:.1?}",
            r.sf_crossings, r.sf_shift, elapsed
        ),
    )
}

fn c2_sweep() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for b_in in 0..=1 {
        for b_out in 0..=1 {
            for w in -2i64..=2 {
                let r = run_flow(&scalar_annulus(w, b_in, b_out), &radial(), &FlowOptions::default()).unwrap().result;
                let want = b_in as i64 * -w + b_out as i64 * w;
                if r.sf_crossings != want {
                    failures.push(format!("(b={b_in}{b_out}, w={w}): {} != {want}", r.sf_crossings));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    check(failures.is_empty() && elapsed <= BUDGET_SWEEP, format!("20 runs, mismatches {failures:?}, {elapsed:.1?}"))
}

fn same_sign_vanishing() -> Outcome {
    let mut sf = Vec::new();
    let mut min_abs = f64::INFINITY;
    for b in [0, 1] {
        let p = scalar_annulus(3, b, b);
        let run = run_flow(&p, &radial(), &FlowOptions::default()).unwrap();
        sf.push(run.result.sf_crossings);
        let mut slices = run.bands.slices.clone();
        for i in 0..=40 {
            slices.push(spectrum_at(&p, i as f64 / 40.0, 1.0, &ShootingOptions::default()).unwrap());
        }
        for s in &slices {
            min_abs = s.values().iter().map(|v| v.abs()).fold(min_abs, f64::min);
        }
    }
    check(sf == [0, 0] && min_abs >= GAP_FLOOR, format!("sf {sf:?}, min |λ| over all slices {min_abs:.4}"))
}

fn ab_algebra() -> Outcome {
    let report = cmd_ab(&RunConfig::default()).unwrap();
    let mut formula_err: f64 = 0.0;
    for p in report.points.iter().filter(|p| p.elliptic) {
        let plus = 1.0 / ((p.lambda + p.phi) / 2.0).tan();
        let minus = ((p.lambda - p.phi) / 2.0).tan();
        let scale = plus.abs().max(minus.abs()).max(1.0);
        formula_err = formula_err
            .max((p.beta_plus.unwrap() - plus).abs() / scale)
            .max((p.beta_minus.unwrap() - minus).abs() / scale);
    }
    let elliptic = report.points.len() - report.non_elliptic;
    check(
        report.b_count_mismatches == 0
            && formula_err <= BETA_TOL
            && report.max_beta_defect <= BETA_TOL
            && report.eigenspace_samples == 100
            && report.max_eigenspace_defect <= EIGENSPACE_TOL,
        format!(
            "{elliptic} elliptic points, b mismatches {}, β formula {formula_err:.1e}, β from involution {:.1e}, eigenspace {:.1e}",
            report.b_count_mismatches, report.max_beta_defect, report.max_eigenspace_defect
        ),
    )
}

fn time_reversal() -> Outcome {
    let mut sf = Vec::new();
    for w in [1, 2] {
        let mut p = scalar_annulus(w, 0, 0);
        p.operator.n = 2;
        let spec = ComponentBoundarySpec::Ab { lambda: 0.0, phi: PI / 2.0, nu: [0.0, 0.0, 1.0] };
        let boundary = boundary_from_specs(2, &[spec.clone(), spec], 1e-8, 1e-8).unwrap();
        let p = FlowProblem::new(p.domain, p.operator, boundary, p.path).unwrap();
        sf.push(run_flow(&p, &radial(), &FlowOptions::default()).unwrap().result.sf_crossings);
    }
    check(sf == [0, 0], format!("Λ ≡ 0, φ ≡ π/2, w = 1, 2: sf {sf:?}"))
}

fn fem_worst_relative(p: &FlowProblem, n_r: usize, n_phi: usize, t: f64) -> f64 {
    let solver = FemSolver::new(p, FemOptions { n_r, n_phi, ..Default::default() }).unwrap();
    let values = solver.slice(t, 1.8).unwrap().values();
    lambda1(t)
        .into_iter()
        .filter(|l| l.abs() <= 1.5)
        .map(|l| nearest(&values, l) / l.abs())
        .fold(0.0, f64::max)
}

fn fem_vs_radial() -> Outcome {
    let start = Instant::now();
    let p = FlowProblem::annulus_example();
    let r = run_flow(&p, &SolverSettings::Fem(FemOptions::default()), &FlowOptions::default()).unwrap().result;
    let errs: Vec<f64> = [0.25, 0.5, 0.75].iter().map(|&t| fem_worst_relative(&p, 40, 160, t)).collect();
    let worst = errs.iter().copied().fold(0.0, f64::max);
    let refined = fem_worst_relative(&p, 80, 320, 0.25);
    let elapsed = start.elapsed();
    check(
        r.sf_crossings == 1 && worst <= FEM_REL_TOL && refined < errs[0] && elapsed <= BUDGET_FEM,
        format!(
            "sf {} shift {:?}, worst relative error {worst:.1e}, at t=0.25 {:.1e} -> {refined:.1e} on 80x320, {elapsed:.1?}",
            r.sf_crossings, r.sf_shift, errs[0]
        ),
    )
}

fn property_checks() -> Outcome {
    let report = property_suite(&FlowProblem::annulus_example(), &radial(), &FlowOptions::default()).unwrap();
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.property.as_str()).collect();
    let names: Vec<&str> = report.checks.iter().map(|c| c.property.as_str()).collect();
    check(report.all_passed(), format!("checks {names:?}, failed {failed:?}"))
}

fn cm_probe() -> Outcome {
    let config = RunConfig {
        fixtures_dir: Some(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")),
        ..Default::default()
    };
    let report = cmd_probe_cm(&config).unwrap();
    let flows: Vec<(f64, i64)> = report.runs.iter().map(|r| (r.width.unwrap(), r.sf_crossings)).collect();
    check(
        report.h_independent,
        format!(
            "(h, sf) {flows:?}, Σbμ {}, measured c_3 {:?} (conjectured {})",
            report.runs[0].pairing, report.c_m_measured, report.conjectured_c_m
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(u8, &str, bool, fn() -> Outcome); 8] = [
        (1, "exact annulus spectrum and flow", true, exact_reproduction),
        (2, "c_2 = 1 sweep", true, c2_sweep),
        (3, "same-sign vanishing", true, same_sign_vanishing),
        (4, "graphene boundary algebra", true, ab_algebra),
        (5, "time reversal", true, time_reversal),
        (6, "FEM against radial", true, fem_vs_radial),
        (7, "property suite", true, property_checks),
        (8, "c_m probe (report only)", false, cm_probe),
    ];
    let mut failed = Vec::new();
    for (id, name, hard, run) in criteria {
        let out = run();
        println!("criterion {id} {}: {name}: {}", if out.passed { "PASS" } else { "FAIL" }, out.detail);
        if hard && !out.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}
