use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use specflow_cli::{cmd_flow, cmd_oracle, RunConfig, SolverChoice};
use specflow_core::boundary::ComponentBoundarySpec;
use specflow_core::specflow::FlowResult;

fn specflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specflow")).args(args).output().unwrap()
}

fn write_config(dir: &Path, config: &RunConfig) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, config.to_toml().unwrap()).unwrap();
    path
}

fn scalar_boundary(values: &[f64]) -> Vec<ComponentBoundarySpec> {
    values.iter().map(|&value| ComponentBoundarySpec::Scalar { value }).collect()
}

fn parse_result(out: &Output) -> FlowResult {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn oracle_default_flow_is_one() {
    let r = parse_result(&specflow(&["oracle"]));
    assert_eq!(r.sf_crossings, 1);
    assert_eq!(r.sf_shift, Some(1));
    assert_eq!(r.predicted, Some(1));
}

#[test]
fn wide_oracle_window_keeps_the_flow() {
    let r = parse_result(&specflow(&["oracle", "--window", "10"]));
    assert_eq!(r.sf_crossings, 1);
}

#[test]
fn two_point_grid_still_shifts_by_one() {
    let r = parse_result(&specflow(&["oracle", "--tgrid", "2"]));
    assert_eq!(r.sf_shift, Some(1));
    assert_eq!(r.t_samples, 2);
    // The endpoint spectra coincide, so the crossing count cannot see the
    // motion and the disagreement is flagged instead.
    assert_eq!(r.methods_agree, Some(r.sf_crossings == 1));
}

#[test]
fn oracle_rejects_other_boundaries() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig { boundary: scalar_boundary(&[-1.0, 1.0]), ..Default::default() };
    let path = write_config(dir.path(), &config);
    let out = specflow(&["oracle", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(cmd_oracle(&config).is_err());
}

#[test]
fn reversed_boundary_flows_backwards() {
    let config = RunConfig { boundary: scalar_boundary(&[-1.0, 1.0]), ..Default::default() };
    let r = cmd_flow(&config).unwrap();
    assert_eq!(r.sf_crossings, -1);
    assert_eq!(r.b_hat, [1, 0]);
    assert_eq!(r.predicted, Some(-1));
}

#[test]
fn missing_mesh_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        fixtures_dir: Some(dir.path().to_path_buf()),
        domain: specflow_cli::config::DomainConfig::Mesh { file: "absent".into() },
        solver: SolverChoice::Fem2d,
        ..Default::default()
    };
    assert!(matches!(cmd_flow(&config), Err(specflow_cli::CliError::MissingInput(_))));
}

#[test]
fn report_fails_when_one_input_disagrees() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(specflow(&["flow", "--out", out]).status.success());
    let good = dir.path().join("flow.json");
    let single = specflow(&["report", good.to_str().unwrap()]);
    assert_eq!(single.status.code(), Some(0));
    let table = String::from_utf8_lossy(&single.stdout);
    assert_eq!(table.lines().count(), 2, "{table}");

    let mut bad: FlowResult = serde_json::from_str(&std::fs::read_to_string(&good).unwrap()).unwrap();
    bad.sf_crossings = 0;
    bad.prediction_agrees = Some(false);
    std::fs::write(dir.path().join("bad.json"), serde_json::to_string(&bad).unwrap()).unwrap();
    let merged = specflow(&["report", out]);
    assert_eq!(merged.status.code(), Some(1));
}

#[test]
fn empty_report_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(specflow(&["report", dir.path().to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn rerun_outputs_are_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(specflow(&["flow", "--out", d.path().to_str().unwrap()]).status.success());
    }
    for name in ["flow.json", "flow_slices.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
}

proptest! {
    #[test]
    fn toml_round_trip(
        window in 0.5f64..12.0,
        t_points in 2usize..64,
        solver in prop_oneof![Just(SolverChoice::Oracle), Just(SolverChoice::Radial), Just(SolverChoice::Fem2d)],
        values in proptest::collection::vec(-3.0f64..3.0, 2),
    ) {
        let mut config = RunConfig { solver, boundary: scalar_boundary(&values), ..Default::default() };
        config.flow.window = window;
        config.flow.t_points = t_points;
        let text = config.to_toml().unwrap();
        prop_assert_eq!(RunConfig::from_toml(&text, Path::new("mem")).unwrap(), config);
    }
}
