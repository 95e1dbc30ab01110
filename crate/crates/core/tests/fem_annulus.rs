use std::path::PathBuf;

use specflow_core::fem2d::{FemOptions, FemSolver};
use specflow_core::mesh::{load_mesh, save_mesh};
use specflow_core::problem::FlowProblem;
use specflow_core::spectrum::SliceSolver;
use specflow_core::specflow::{run_flow, FlowOptions, SolverSettings};

fn coarse() -> FemOptions {
    FemOptions { n_r: 20, n_phi: 80, ..Default::default() }
}

#[test]
fn half_integer_spectrum_at_midpoint() {
    let p = FlowProblem::annulus_example();
    let solver = FemSolver::new(&p, coarse()).unwrap();
    let v = solver.slice(0.5, 1.8).unwrap().values();
    let inside: Vec<f64> = v.into_iter().filter(|x| x.abs() <= 1.6).collect();
    let want = [-1.5, -0.5, 0.5, 1.5];
    assert_eq!(inside.len(), want.len(), "{inside:?}");
    for (g, w) in inside.iter().zip(want) {
        assert!((g - w).abs() <= 0.02 * w.abs(), "{g} vs {w}");
    }
}

#[test]
fn coarse_mesh_flow_is_one() {
    let p = FlowProblem::annulus_example();
    let r = run_flow(&p, &SolverSettings::Fem(coarse()), &FlowOptions::default()).unwrap().result;
    assert_eq!(r.sf_crossings, 1);
    assert_eq!(r.sf_shift, Some(1));
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

#[test]
fn dumbbell_fixtures_have_three_components() {
    for name in ["dumbbell_h100", "dumbbell_h050", "dumbbell_h025"] {
        let m = load_mesh(&fixture(name)).unwrap();
        assert_eq!(m.num_components(), 3, "{name}");
        let mut labels: Vec<usize> = m.loops().iter().map(|l| l.label).collect();
        labels.sort();
        assert_eq!(labels, [1, 2, 3]);
        assert!(m.min_angle_degrees() >= 29.9);
    }
}

#[test]
fn fixtures_are_stored_canonically() {
    let dir = tempfile::tempdir().unwrap();
    let src = fixture("dumbbell_h050");
    let m = load_mesh(&src).unwrap();
    let out = dir.path().join("copy");
    save_mesh(&m, &out).unwrap();
    for ext in ["node", "ele", "edge"] {
        let a = std::fs::read_to_string(src.with_extension(ext)).unwrap();
        let b = std::fs::read_to_string(out.with_extension(ext)).unwrap();
        assert_eq!(a, b, "{ext} differs");
    }
}
