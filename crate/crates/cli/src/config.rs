//! TOML run configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use specflow_core::boundary::{boundary_from_specs, ComponentBoundarySpec};
use specflow_core::domain::{make_annulus_at, DomainSpec};
use specflow_core::fem2d::FemOptions;
use specflow_core::mesh::{load_mesh, mesh_files, Point};
use specflow_core::operator::{GaugeField, MetricSpec, OperatorSpec, PhiField, PotentialField};
use specflow_core::problem::{FlowProblem, PotentialPath};
use specflow_core::radial::ShootingOptions;
use specflow_core::specflow::{CmSetting, FlowOptions, SolverSettings};

use crate::error::{CliError, Result};

/// Environment variable naming the fixture directory.
pub const FIXTURES_ENV: &str = "SPECFLOW_FIXTURES";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    Oracle,
    Radial,
    Fem2d,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainConfig {
    Annulus {
        r_in: f64,
        r_out: f64,
        #[serde(default)]
        center: Point,
    },
    DisjointUnion { parts: Vec<DomainConfig> },
    /// Triangle `.node/.ele/.edge` files; relative paths are resolved in the
    /// fixture directory.
    Mesh { file: PathBuf },
}

impl DomainConfig {
    fn build(&self, fixtures: &Path) -> Result<DomainSpec> {
        Ok(match self {
            DomainConfig::Annulus { r_in, r_out, center } => make_annulus_at(*r_in, *r_out, *center)?,
            DomainConfig::DisjointUnion { parts } => {
                DomainSpec::DisjointUnion(parts.iter().map(|p| p.build(fixtures)).collect::<Result<_>>()?)
            }
            DomainConfig::Mesh { file } => DomainSpec::Meshed(Arc::new(load_mesh(&resolve(fixtures, file))?)),
        })
    }

    fn mesh_files(&self, fixtures: &Path, out: &mut Vec<PathBuf>) {
        match self {
            DomainConfig::Annulus { .. } => {}
            DomainConfig::DisjointUnion { parts } => parts.iter().for_each(|p| p.mesh_files(fixtures, out)),
            DomainConfig::Mesh { file } => out.push(resolve(fixtures, file)),
        }
    }
}

fn resolve(fixtures: &Path, file: &Path) -> PathBuf {
    if file.is_absolute() {
        file.to_path_buf()
    } else {
        fixtures.join(file)
    }
}

/// Checks that the `.node`, `.ele` and `.edge` files of a mesh exist.
pub fn check_mesh_files(base: &Path) -> Result<()> {
    for f in mesh_files(base) {
        if !f.is_file() {
            return Err(CliError::MissingInput(format!("fixture file {} not found", f.display())));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Smallest singular value accepted for `B` and `n'`.
    pub inv_tol: f64,
    /// Distance from `Λ ± φ ∈ πℤ` below which graphene data is non-elliptic.
    pub ell_tol: f64,
    /// Eigenvalues of one mode closer than this share a CSV row.
    pub multiplicity_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { inv_tol: 1e-8, ell_tol: 1e-8, multiplicity_tol: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleOptions {
    pub eig_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { eig_tol: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AbGridConfig {
    /// Grid points per axis on `[0, 2π)`.
    pub points: usize,
    /// Random `(B, n)` samples for the eigenspace check.
    pub samples: usize,
    pub seed: u64,
}

impl Default for AbGridConfig {
    fn default() -> Self {
        Self { points: 20, samples: 100, seed: 11 }
    }
}

/// Dumbbell runs for the `c_m` probe. Component labels follow the fixtures:
/// holes first, the outer boundary last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    /// Fixture base names paired with their band widths.
    pub fixtures: Vec<String>,
    pub widths: Vec<f64>,
    pub centers: Vec<Point>,
    pub exponents: Vec<i64>,
    /// Scalar boundary value per component.
    pub boundary: Vec<f64>,
    pub window: f64,
    /// Also run the all-positive boundary on the first fixture.
    pub same_sign: bool,
    /// Also compare a union of two annuli with its parts.
    pub disjoint_annuli: bool,
    /// Structured resolution used for the annulus comparison.
    pub annulus_n_r: usize,
    pub annulus_n_phi: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            fixtures: vec!["dumbbell_h100".into(), "dumbbell_h050".into(), "dumbbell_h025".into()],
            widths: vec![1.0, 0.5, 0.25],
            centers: vec![[-2.6, 0.0], [2.6, 0.0]],
            exponents: vec![1, 0],
            boundary: vec![-1.0, -1.0, 1.0],
            window: 1.5,
            same_sign: true,
            disjoint_annuli: true,
            annulus_n_r: 12,
            annulus_n_phi: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    /// Stem of the files written by `flow`.
    pub name: String,
    pub dir: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { name: "flow".into(), dir: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub solver: SolverChoice,
    /// Overrides the fixture directory from the environment.
    pub fixtures_dir: Option<PathBuf>,
    pub domain: DomainConfig,
    pub operator: OperatorSpec,
    pub path: PotentialPath,
    pub boundary: Vec<ComponentBoundarySpec>,
    pub flow: FlowOptions,
    pub oracle: OracleOptions,
    pub radial: ShootingOptions,
    pub fem: FemOptions,
    pub tolerances: Tolerances,
    pub ab: AbGridConfig,
    pub probe: ProbeConfig,
    pub output: OutputConfig,
}

/// The exactly solvable annulus: cylinder metric, polar frame, `μ = e^{iφ}`,
/// `B = +1` inside and `-1` outside.
impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverChoice::Radial,
            fixtures_dir: None,
            domain: DomainConfig::Annulus { r_in: 1.0, r_out: 2.0, center: [0.0, 0.0] },
            operator: OperatorSpec {
                n: 1,
                metric: MetricSpec::CylinderPolar { center: [0.0, 0.0] },
                phi: PhiField::PolarFrame { center: [0.0, 0.0], polar: [[1.0, 0.0], [0.0, 1.0]] },
                q_base: PotentialField::Zero,
            },
            path: PotentialPath::GaugeLinear { gauge: GaugeField::angular(1) },
            boundary: vec![ComponentBoundarySpec::Scalar { value: 1.0 }, ComponentBoundarySpec::Scalar { value: -1.0 }],
            flow: FlowOptions::default(),
            oracle: OracleOptions::default(),
            radial: ShootingOptions::default(),
            fem: FemOptions::default(),
            tolerances: Tolerances::default(),
            ab: AbGridConfig::default(),
            probe: ProbeConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub window: Option<f64>,
    pub t_points: Option<usize>,
    pub solver: Option<SolverChoice>,
    pub c_m: Option<CmSetting>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|source| CliError::Toml { path: origin.to_path_buf(), source })
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_toml(&text, path)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(w) = o.window {
            self.flow.window = w;
        }
        if let Some(n) = o.t_points {
            self.flow.t_points = n;
        }
        if let Some(s) = o.solver {
            self.solver = s;
        }
        if let Some(c) = o.c_m {
            self.flow.c_m = c;
        }
        if let Some(d) = &o.out {
            self.output.dir = Some(d.clone());
        }
    }

    pub fn fixtures_dir(&self) -> PathBuf {
        self.fixtures_dir
            .clone()
            .or_else(|| std::env::var_os(FIXTURES_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("fixtures"))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tolerances.inv_tol", self.tolerances.inv_tol),
            ("tolerances.ell_tol", self.tolerances.ell_tol),
            ("tolerances.multiplicity_tol", self.tolerances.multiplicity_tol),
            ("oracle.eig_tol", self.oracle.eig_tol),
            ("radial.eig_tol", self.radial.eig_tol),
            ("radial.ode_tol", self.radial.ode_tol),
            ("fem.res_tol", self.fem.res_tol),
            ("fem.eig_tol", self.fem.eig_tol),
            ("fem.krylov_tol", self.fem.krylov_tol),
            ("flow.window", self.flow.window),
            ("probe.window", self.probe.window),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(CliError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(m) = self.flow.match_tol {
            if !(m > 0.0) {
                return Err(CliError::InvalidConfig(format!("flow.match_tol must be positive, got {m}")));
            }
        }
        let fixtures = self.fixtures_dir();
        let mut files = Vec::new();
        self.domain.mesh_files(&fixtures, &mut files);
        files.iter().try_for_each(|f| check_mesh_files(f))
    }

    pub fn problem(&self) -> Result<FlowProblem> {
        self.validate()?;
        let domain = self.domain.build(&self.fixtures_dir())?;
        let boundary =
            boundary_from_specs(self.operator.n, &self.boundary, self.tolerances.inv_tol, self.tolerances.ell_tol)?;
        Ok(FlowProblem::new(domain, self.operator.clone(), boundary, self.path.clone())?)
    }

    pub fn solver_settings(&self) -> SolverSettings {
        match self.solver {
            SolverChoice::Oracle => SolverSettings::Oracle { eig_tol: self.oracle.eig_tol },
            SolverChoice::Radial => SolverSettings::Radial(self.radial.clone()),
            SolverChoice::Fem2d => SolverSettings::Fem(self.fem.clone()),
        }
    }
}

/// Parses `--cm`: an integer or `measure`.
pub fn parse_cm(s: &str) -> std::result::Result<CmSetting, String> {
    match s {
        "measure" => Ok(CmSetting::Measure),
        "auto" => Ok(CmSetting::Auto),
        _ => s.parse::<i64>().map(CmSetting::Fixed).map_err(|_| format!("expected an integer or `measure`, got `{s}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let c = RunConfig::default();
        let text = c.to_toml().unwrap();
        let back = RunConfig::from_toml(&text, Path::new("x.toml")).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml().unwrap(), text);
    }

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(RunConfig::from_toml("", Path::new("x.toml")).unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let c = RunConfig::from_toml("solver = \"fem2d\"\n[flow]\nwindow = 1.5\n", Path::new("x.toml")).unwrap();
        assert_eq!(c.solver, SolverChoice::Fem2d);
        assert_eq!(c.flow.window, 1.5);
        assert_eq!(c.flow.t_points, FlowOptions::default().t_points);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = RunConfig::default();
        c.apply(&Overrides { window: Some(4.0), t_points: Some(3), c_m: Some(CmSetting::Measure), ..Default::default() });
        assert_eq!((c.flow.window, c.flow.t_points, c.flow.c_m), (4.0, 3, CmSetting::Measure));
    }

    #[test]
    fn cm_flag_values() {
        assert_eq!(parse_cm("measure"), Ok(CmSetting::Measure));
        assert_eq!(parse_cm("2"), Ok(CmSetting::Fixed(2)));
        assert!(parse_cm("two").is_err());
    }

    #[test]
    fn rejects_bad_tolerances_and_missing_fixtures() {
        let mut c = RunConfig::default();
        c.tolerances.inv_tol = 0.0;
        assert!(matches!(c.validate(), Err(CliError::InvalidConfig(_))));
        let c = RunConfig {
            domain: DomainConfig::Mesh { file: "/nonexistent/mesh".into() },
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(CliError::MissingInput(_))));
    }
}
