use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use specflow_core::boundary::{
    ab_b_count, ab_is_elliptic, ab_m_matrix, ab_time_reversal_predict, ab_to_b, bc_subspace, m_from_b,
    negative_count, AbBoundaryData, BoundaryCondition, ComponentBoundarySpec, TimeReversalPrediction,
};
use specflow_core::domain::{make_annulus_at, DomainSpec};
use specflow_core::linalg::{self, c64, CMat, I};
use specflow_core::operator::{GaugeField, MetricSpec, OperatorSpec, PhiField, PotentialField};
use specflow_core::problem::{FlowProblem, PotentialPath};
use specflow_core::radial::check_oracle_configuration;
use specflow_core::spectrum::write_csv;
use specflow_core::specflow::{pairing, run_flow, FlowOptions, FlowResult, FlowRun, SolverSettings};

use crate::config::{check_mesh_files, RunConfig};
use crate::error::{CliError, Result};

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(CliError::io(&path))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `<stem>.json` and `<stem>_slices.csv`; the JSON refers to the CSV
/// by file name so that outputs do not depend on the output directory.
fn emit_flow(run: &FlowRun, dir: Option<&Path>, stem: &str, tol: f64) -> Result<FlowResult> {
    let mut result = run.result.clone();
    if let Some(dir) = dir {
        let csv_name = format!("{stem}_slices.csv");
        write_file(dir, &csv_name, &write_csv(&run.bands.slices, tol))?;
        result.slices_csv_path = Some(csv_name);
        write_file(dir, &format!("{stem}.json"), &to_json(&result)?)?;
    }
    Ok(result)
}

/// Closed-form spectrum of the exactly solvable annulus.
pub fn cmd_oracle(config: &RunConfig) -> Result<FlowResult> {
    let problem = config.problem()?;
    check_oracle_configuration(&problem)?;
    let settings = SolverSettings::Oracle { eig_tol: config.oracle.eig_tol };
    let run = run_flow(&problem, &settings, &config.flow)?;
    emit_flow(&run, config.output.dir.as_deref(), "oracle", config.tolerances.multiplicity_tol)
}

pub fn cmd_flow(config: &RunConfig) -> Result<FlowResult> {
    let problem = config.problem()?;
    let run = run_flow(&problem, &config.solver_settings(), &config.flow)?;
    emit_flow(&run, config.output.dir.as_deref(), &config.output.name, config.tolerances.multiplicity_tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbPoint {
    pub lambda: f64,
    pub phi: f64,
    pub elliptic: bool,
    /// Table value `#{Λ ± φ mod 2π ∈ (π, 2π)}`.
    pub b_count: usize,
    /// Negative eigenvalues of the translated matrix `B`.
    pub b_from_matrix: Option<usize>,
    pub beta_plus: Option<f64>,
    pub beta_minus: Option<f64>,
    /// Largest deviation of `β±` recovered from the block involution.
    pub beta_defect: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbReport {
    pub points: Vec<AbPoint>,
    pub non_elliptic: usize,
    pub b_count_mismatches: usize,
    pub max_beta_defect: f64,
    pub eigenspace_samples: usize,
    /// Largest projector distance between the `+1` eigenspace of `M` and
    /// the boundary subspace over the random samples.
    pub max_eigenspace_defect: f64,
    pub time_reversal: Option<TimeReversalPrediction>,
}

/// Recovers `B` from the `+1` eigenspace `[X; Y]` of a boundary involution:
/// `i n X = B Y`.
fn b_from_involution(m: &CMat, n: c64) -> Result<CMat> {
    let dim = m.nrows() / 2;
    let (vals, vecs) = linalg::hermitian_eigen(&linalg::hermitian_part(m))?;
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.0).collect();
    if cols.len() != dim {
        return Err(CliError::InvalidConfig(format!("involution has a {}-dimensional +1 eigenspace", cols.len())));
    }
    let x = CMat::from_fn(dim, dim, |i, j| vecs[(i, cols[j])]);
    let y = CMat::from_fn(dim, dim, |i, j| vecs[(dim + i, cols[j])]);
    Ok(linalg::scale(&(&x * &linalg::inverse(&y, 1e-12)?), I * n))
}

/// `v* B v` on the unit eigenvectors `v±` of the valley matrix.
fn betas_on_valley(data: &AbBoundaryData, b: &CMat) -> Result<(f64, f64)> {
    let (vals, vecs) = linalg::hermitian_eigen(&data.valley_matrix())?;
    let rayleigh = |i: usize| -> f64 {
        let v = CMat::from_fn(2, 1, |r, _| vecs[(r, i)]);
        (&linalg::adjoint(&v) * &(b * &v))[(0, 0)].re
    };
    let (minus, plus) = if vals[0] < vals[1] { (0, 1) } else { (1, 0) };
    Ok((rayleigh(plus), rayleigh(minus)))
}

fn ab_point(lambda: f64, phi: f64, ell_tol: f64) -> Result<AbPoint> {
    let elliptic = ab_is_elliptic(lambda, phi, ell_tol);
    let mut point = AbPoint {
        lambda,
        phi,
        elliptic,
        b_count: ab_b_count(lambda, phi),
        b_from_matrix: None,
        beta_plus: None,
        beta_minus: None,
        beta_defect: None,
    };
    if !elliptic {
        return Ok(point);
    }
    let data = AbBoundaryData::new(lambda, phi, [0.3, -0.5, 0.8])?;
    let tr = ab_to_b(&data, ell_tol)?;
    let n = c64::from_polar(1.0, 0.7);
    let recovered = b_from_involution(&ab_m_matrix(&data, n), n)?;
    let (bp, bm) = betas_on_valley(&data, &recovered)?;
    let scale = tr.beta_plus.abs().max(tr.beta_minus.abs()).max(1.0);
    point.b_from_matrix = Some(negative_count(&tr.b)?);
    point.beta_plus = Some(tr.beta_plus);
    point.beta_minus = Some(tr.beta_minus);
    point.beta_defect = Some((bp - tr.beta_plus).abs().max((bm - tr.beta_minus).abs()) / scale);
    Ok(point)
}

fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> CMat {
    let a = CMat::from_fn(dim, dim, |_, _| linalg::cx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    linalg::hermitian_part(&a)
}

fn eigenspace_defect(rng: &mut ChaCha8Rng) -> Result<f64> {
    let dim = rng.random_range(1..=3);
    let b = loop {
        let b = random_hermitian(rng, dim);
        if linalg::min_singular_value(&b)? > 0.05 {
            break b;
        }
    };
    let n = c64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..TAU));
    let m = m_from_b(&b, n)?;
    let half = linalg::scale_re(&(&linalg::identity(2 * dim) + &m), 0.5);
    Ok(linalg::max_abs_diff(&half, &linalg::projector(&bc_subspace(&b, n))?))
}

/// Time-reversal prediction when every component carries graphene data with `Λ = 0`.
fn time_reversal(config: &RunConfig) -> Result<Option<TimeReversalPrediction>> {
    let data: Option<Vec<AbBoundaryData>> = config
        .boundary
        .iter()
        .map(|s| match s {
            ComponentBoundarySpec::Ab { lambda, phi, nu } if *lambda == 0.0 => AbBoundaryData::new(*lambda, *phi, *nu).ok(),
            _ => None,
        })
        .collect();
    let (Some(data), Some(gauge)) = (data, config.path.gauge()) else {
        return Ok(None);
    };
    let problem = config.problem()?;
    Ok(Some(ab_time_reversal_predict(&problem.domain, gauge, &data, config.tolerances.ell_tol)?))
}

/// Ellipticity map, `b` counts and `β±` over a `(Λ, φ)` grid on `[0, 2π)²`.
pub fn cmd_ab(config: &RunConfig) -> Result<AbReport> {
    let n = config.ab.points;
    let ell_tol = config.tolerances.ell_tol;
    let mut points = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let step = TAU / n as f64;
            points.push(ab_point(i as f64 * step, j as f64 * step, ell_tol)?);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.ab.seed);
    let mut max_eigenspace_defect: f64 = 0.0;
    for _ in 0..config.ab.samples {
        max_eigenspace_defect = max_eigenspace_defect.max(eigenspace_defect(&mut rng)?);
    }
    let report = AbReport {
        non_elliptic: points.iter().filter(|p| !p.elliptic).count(),
        b_count_mismatches: points.iter().filter(|p| p.b_from_matrix.is_some_and(|b| b != p.b_count)).count(),
        max_beta_defect: points.iter().filter_map(|p| p.beta_defect).fold(0.0, f64::max),
        points,
        eigenspace_samples: config.ab.samples,
        max_eigenspace_defect,
        time_reversal: time_reversal(config)?,
    };
    if let Some(dir) = config.output.dir.as_deref() {
        write_file(dir, "ab.json", &to_json(&report)?)?;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRun {
    pub label: String,
    pub width: Option<f64>,
    pub sf_crossings: i64,
    pub sf_shift: Option<i64>,
    pub shift_error: Option<String>,
    pub b_hat: Vec<usize>,
    pub mu_hat: Vec<i64>,
    /// `Σ b_j μ_j`.
    pub pairing: i64,
    pub c_m_measured: Option<f64>,
    pub t_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnionCheck {
    pub union_sf: i64,
    pub part_sf: Vec<i64>,
    pub additive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub runs: Vec<ProbeRun>,
    /// All widths give the same integer.
    pub h_independent: bool,
    pub c_m_measured: Option<f64>,
    pub conjectured_c_m: i64,
    pub matches_conjecture: Option<bool>,
    pub same_sign: Option<ProbeRun>,
    pub disjoint_union: Option<UnionCheck>,
    pub note: String,
}

fn euclidean_scalar() -> OperatorSpec {
    OperatorSpec { n: 1, metric: MetricSpec::Euclidean, phi: PhiField::Identity, q_base: PotentialField::Zero }
}

fn probe_run(label: &str, width: Option<f64>, problem: &FlowProblem, settings: &SolverSettings, opts: &FlowOptions) -> Result<ProbeRun> {
    let r = run_flow(problem, settings, opts)?.result;
    let mu_hat = r.mu_hat.clone().unwrap_or_default();
    let pair = pairing(&r.b_hat, &mu_hat)?;
    log::info!("{label}: sf = {}, Σbμ = {pair}", r.sf_crossings);
    Ok(ProbeRun {
        label: label.into(),
        width,
        sf_crossings: r.sf_crossings,
        sf_shift: r.sf_shift,
        shift_error: r.shift_error,
        b_hat: r.b_hat,
        mu_hat,
        pairing: pair,
        c_m_measured: r.c_m_measured,
        t_samples: r.t_samples,
    })
}

fn union_check(config: &RunConfig, settings: &SolverSettings, opts: &FlowOptions) -> Result<UnionCheck> {
    let centers = [[-3.0, 0.0], [3.0, 0.0]];
    let parts: Vec<DomainSpec> = centers.iter().map(|&c| make_annulus_at(1.0, 2.0, c)).collect::<specflow_core::Result<_>>()?;
    let gauge = GaugeField::product_of(centers.to_vec(), vec![1, 1]);
    let path = PotentialPath::GaugeLinear { gauge };
    let inv_tol = config.tolerances.inv_tol;
    let mut settings = settings.clone();
    if let SolverSettings::Fem(f) = &mut settings {
        f.n_r = config.probe.annulus_n_r;
        f.n_phi = config.probe.annulus_n_phi;
    }
    let scalar = |values: &[f64]| BoundaryCondition::scalar(values, inv_tol);
    let union = FlowProblem::new(
        DomainSpec::DisjointUnion(parts.clone()),
        euclidean_scalar(),
        scalar(&[-1.0, 1.0, -1.0, 1.0])?,
        path.clone(),
    )?;
    let union_sf = probe_run("union", None, &union, &settings, opts)?.sf_crossings;
    let mut part_sf = Vec::new();
    for (k, d) in parts.into_iter().enumerate() {
        let p = FlowProblem::new(d, euclidean_scalar(), scalar(&[-1.0, 1.0])?, path.clone())?;
        part_sf.push(probe_run(&format!("annulus {}", k + 1), None, &p, &settings, opts)?.sf_crossings);
    }
    Ok(UnionCheck { union_sf, additive: union_sf == part_sf.iter().sum::<i64>(), part_sf })
}

/// FEM flow on the three-boundary dumbbell fixtures at each band width.
pub fn cmd_probe_cm(config: &RunConfig) -> Result<ProbeReport> {
    let probe = &config.probe;
    if probe.fixtures.is_empty() {
        return Err(CliError::MissingInput("probe.fixtures is empty".into()));
    }
    if probe.widths.len() != probe.fixtures.len() {
        return Err(CliError::InvalidConfig("probe.widths must pair with probe.fixtures".into()));
    }
    let fixtures = config.fixtures_dir();
    let gauge = GaugeField::product_of(probe.centers.clone(), probe.exponents.clone());
    let opts = FlowOptions { window: probe.window, ..config.flow.clone() };
    let settings = match config.solver_settings() {
        s @ SolverSettings::Fem(_) => s,
        _ => SolverSettings::Fem(config.fem.clone()),
    };
    let dumbbell = |name: &str, values: &[f64]| -> Result<FlowProblem> {
        let base = fixtures.join(name);
        check_mesh_files(&base)?;
        let mesh = specflow_core::mesh::load_mesh(&base)?;
        Ok(FlowProblem::new(
            DomainSpec::Meshed(std::sync::Arc::new(mesh)),
            euclidean_scalar(),
            BoundaryCondition::scalar(values, config.tolerances.inv_tol)?,
            PotentialPath::GaugeLinear { gauge: gauge.clone() },
        )?)
    };
    let mut runs = Vec::new();
    for (name, &h) in probe.fixtures.iter().zip(&probe.widths) {
        runs.push(probe_run(name, Some(h), &dumbbell(name, &probe.boundary)?, &settings, &opts)?);
    }
    let first = runs[0].sf_crossings;
    let h_independent = runs.iter().all(|r| r.sf_crossings == first);
    let c_m_measured = if h_independent { runs[0].c_m_measured } else { None };
    let same_sign = if probe.same_sign {
        let positive = vec![1.0; probe.boundary.len()];
        Some(probe_run(&format!("{} same sign", probe.fixtures[0]), Some(probe.widths[0]), &dumbbell(&probe.fixtures[0], &positive)?, &settings, &opts)?)
    } else {
        None
    };
    let disjoint_union = if probe.disjoint_annuli { Some(union_check(config, &settings, &opts)?) } else { None };
    let report = ProbeReport {
        runs,
        h_independent,
        c_m_measured,
        conjectured_c_m: 1,
        matches_conjecture: c_m_measured.map(|c| (c - 1.0).abs() < 1e-12),
        same_sign,
        disjoint_union,
        note: "c_m is measured as sf / Σ b_j μ_j; the flow does not depend on the band width, so shrinking \
               the band relates the dumbbell to a union of annuli, where the constant is 1"
            .into(),
    };
    if let Some(dir) = config.output.dir.as_deref() {
        write_file(dir, "probe_cm.json", &to_json(&report)?)?;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub config: String,
    pub solver: String,
    pub sf_crossings: i64,
    pub sf_shift: Option<i64>,
    pub predicted: Option<i64>,
    pub agree: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub all_agree: bool,
}

impl Report {
    pub fn render(&self) -> String {
        let opt = |v: Option<i64>| v.map_or("-".to_string(), |x| x.to_string());
        let mut out = format!("{:<24} {:<8} {:>4} {:>6} {:>10} {:>6}\n", "config", "solver", "sf", "shift", "predicted", "agree");
        for r in &self.rows {
            out += &format!(
                "{:<24} {:<8} {:>4} {:>6} {:>10} {:>6}\n",
                r.config,
                r.solver,
                r.sf_crossings,
                opt(r.sf_shift),
                opt(r.predicted),
                if r.agree { "yes" } else { "NO" }
            );
        }
        out
    }
}

fn flow_inputs(paths: &[PathBuf]) -> Result<Vec<(String, FlowResult)>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(CliError::io(p))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            entries.sort();
            for f in entries {
                let text = std::fs::read_to_string(&f).map_err(CliError::io(&f))?;
                match serde_json::from_str::<FlowResult>(&text) {
                    Ok(r) => out.push((stem(&f), r)),
                    Err(_) => log::debug!("skipping {}: not a flow result", f.display()),
                }
            }
        } else {
            let text = std::fs::read_to_string(p).map_err(CliError::io(p))?;
            out.push((stem(p), serde_json::from_str(&text)?));
        }
    }
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Merges flow results (files, or directories of `.json` files) into one table.
pub fn cmd_report(paths: &[PathBuf]) -> Result<Report> {
    let inputs = flow_inputs(paths)?;
    if inputs.is_empty() {
        return Err(CliError::MissingInput("no flow results given".into()));
    }
    let rows: Vec<ReportRow> = inputs
        .into_iter()
        .map(|(config, r)| ReportRow {
            agree: r.agrees(),
            config,
            solver: r.solver,
            sf_crossings: r.sf_crossings,
            sf_shift: r.sf_shift,
            predicted: r.predicted,
        })
        .collect();
    Ok(Report { all_agree: rows.iter().all(|r| r.agree), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn infinite_mass_point() {
        let p = ab_point(0.0, PI / 2.0, 1e-8).unwrap();
        assert!(p.elliptic);
        assert_eq!(p.b_count, 1);
        assert_eq!(p.b_from_matrix, Some(1));
        assert!((p.beta_plus.unwrap() - 1.0).abs() < 1e-12);
        assert!((p.beta_minus.unwrap() + 1.0).abs() < 1e-12);
        assert!(p.beta_defect.unwrap() < 1e-12);
    }

    #[test]
    fn diagonal_point_is_not_elliptic() {
        let p = ab_point(0.4, 0.4, 1e-8).unwrap();
        assert!(!p.elliptic);
        assert_eq!(p.beta_plus, None);
    }

    #[test]
    fn recovered_betas_match_formulas() {
        for (l, f) in [(0.3, 1.1), (2.0, 0.5), (4.0, 5.5)] {
            let p = ab_point(l, f, 1e-8).unwrap();
            let (bp, bm) = (1.0 / ((l + f) / 2.0).tan(), ((l - f) / 2.0).tan());
            assert!((p.beta_plus.unwrap() - bp).abs() < 1e-12);
            assert!((p.beta_minus.unwrap() - bm).abs() < 1e-12);
            assert!(p.beta_defect.unwrap() < 1e-10);
        }
    }

    #[test]
    fn empty_report_is_an_error() {
        assert!(matches!(cmd_report(&[]), Err(CliError::MissingInput(_))));
    }
}
