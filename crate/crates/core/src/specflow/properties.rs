//! Checks of the structural properties of spectral flow on a base problem.

use serde::Serialize;

use crate::boundary::BoundaryCondition;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::linalg;
use crate::operator::{GaugeField, MatrixSpec, PotentialField, RadialPhase};
use crate::problem::{FlowProblem, PotentialPath};

use super::{run_flow, FlowOptions, SolverSettings};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub property: String,
    pub description: String,
    /// The flows that were compared; the last entry is the reference.
    pub flows: Vec<i64>,
    pub expected: i64,
    pub measured: i64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The report, or the first violated property.
    pub fn into_result(self) -> Result<Self> {
        match self.checks.iter().find(|c| !c.passed) {
            Some(c) => Err(Error::PropertyViolation {
                property: c.property.clone(),
                detail: format!("{}: expected {}, measured {} (flows {:?})", c.description, c.expected, c.measured, c.flows),
            }),
            None => Ok(self),
        }
    }

    fn push(&mut self, property: &str, description: String, flows: Vec<i64>, expected: i64, measured: i64) {
        log::info!("{property} {description}: expected {expected}, measured {measured}");
        self.checks.push(PropertyCheck {
            property: property.into(),
            description,
            flows,
            expected,
            measured,
            passed: expected == measured,
        });
    }
}

fn flow(problem: &FlowProblem, settings: &SolverSettings, options: &FlowOptions) -> Result<i64> {
    Ok(run_flow(problem, settings, options)?.result.sf_crossings)
}

fn with_boundary(problem: &FlowProblem, boundary: BoundaryCondition) -> Result<FlowProblem> {
    FlowProblem::new(problem.domain.clone(), problem.operator.clone(), boundary, problem.path.clone())
}

fn constant_boundary(problem: &FlowProblem, sign: f64) -> Result<BoundaryCondition> {
    let n = problem.operator.n;
    let m = problem.domain.num_components();
    BoundaryCondition::constant(n, vec![linalg::scale_re(&linalg::identity(n), sign); m], 1e-8)
}

fn negated_boundary(problem: &FlowProblem) -> Result<BoundaryCondition> {
    let comps = (1..=problem.domain.num_components())
        .map(|c| Ok(problem.boundary.component(c)?.scaled(-1.0)))
        .collect::<Result<Vec<_>>>()?;
    BoundaryCondition::new(problem.operator.n, comps, 1e-8)
}

fn phase_center(problem: &FlowProblem) -> [f64; 2] {
    match &problem.domain {
        DomainSpec::Annulus { center, .. } => *center,
        _ => problem.operator.metric.center().unwrap_or([0.0, 0.0]),
    }
}

/// Zero-winding gauge factor `e^{i(θ₀ + c r²)}`.
fn trivial_class_gauge(problem: &FlowProblem) -> GaugeField {
    GaugeField {
        phase: 0.7,
        radial: Some(RadialPhase { center: phase_center(problem), coeffs: vec![0.0, 0.0, 0.4] }),
        ..Default::default()
    }
}

fn detour_bump(dim: usize) -> MatrixSpec {
    let diag: Vec<f64> = (0..dim).map(|i| if i < dim / 2 { 0.3 } else { -0.3 }).collect();
    MatrixSpec::from_cmat(&linalg::real_diag(&diag))
}

/// Runs the (P0)–(P4) checks on `base`, whose path must be a pure gauge
/// path `t Q_1`.
pub fn property_suite(base: &FlowProblem, settings: &SolverSettings, options: &FlowOptions) -> Result<PropertyReport> {
    let Some(gauge) = base.path.gauge().cloned() else {
        return Err(Error::InvalidInput("property suite needs a gauge path".into()));
    };
    let options = FlowOptions { t_start: 0.0, t_end: 1.0, ..options.clone() };
    let mut report = PropertyReport::default();
    let sf = flow(base, settings, &options)?;

    // (P0) a kernel-free family
    let invertible = with_boundary(base, constant_boundary(base, 1.0)?)?;
    let run = run_flow(&invertible, settings, &options)?;
    let closest = run.bands.slices.iter().flat_map(|s| s.values()).fold(f64::INFINITY, |m, v| m.min(v.abs()));
    report.push("P0", format!("same-sign boundary, min |λ| = {closest:.3}"), vec![run.result.sf_crossings], 0, run.result.sf_crossings);

    // (P1) homotopic paths with common endpoints
    let squared = base.with_path(PotentialPath::Reparametrized { gauge: gauge.clone(), exponent: 2.0 })?;
    let detour = base.with_path(PotentialPath::Detour { gauge: gauge.clone(), bump: detour_bump(base.operator.dim()) })?;
    let (a, b) = (flow(&squared, settings, &options)?, flow(&detour, settings, &options)?);
    report.push("P1", "t² reparametrization".into(), vec![a, sf], sf, a);
    report.push("P1", "detour through a constant bump".into(), vec![b, sf], sf, b);

    // (P2) splitting the parameter interval
    let left = flow(base, settings, &FlowOptions { t_end: 0.5, t_points: options.t_points.div_ceil(2).max(2), ..options.clone() })?;
    let right = flow(base, settings, &FlowOptions { t_start: 0.5, t_points: options.t_points.div_ceil(2).max(2), ..options.clone() })?;
    report.push("P2", "split at t = 1/2".into(), vec![left, right, sf], sf, left + right);

    // (P3) direct sums
    for (what, partner) in [
        ("negated boundary", with_boundary(base, negated_boundary(base)?)?),
        ("same-sign boundary", invertible.clone()),
    ] {
        let other = flow(&partner, settings, &options)?;
        let sum = flow(&base.direct_sum(&partner)?, settings, &options)?;
        report.push("P3", format!("direct sum with the {what} copy"), vec![sf, other], sf + other, sum);
    }

    // (P4) conjugation by a gauge factor with zero windings
    let nu = trivial_class_gauge(base);
    let q_base = match &base.operator.q_base {
        PotentialField::Zero => PotentialField::Gauge { gauge: nu },
        PotentialField::Gauge { gauge: g } => PotentialField::Gauge { gauge: g.product(&nu)? },
        PotentialField::Constant { .. } => {
            return Err(Error::InvalidInput("conjugation check needs a gauge or zero base potential".into()))
        }
    };
    let mut operator = base.operator.clone();
    operator.q_base = q_base;
    let conjugated = FlowProblem::new(base.domain.clone(), operator, base.boundary.clone(), base.path.clone())?;
    let c = flow(&conjugated, settings, &options)?;
    report.push("P4", "conjugation by exp(i(0.7 + 0.4 r²))".into(), vec![c, sf], sf, c);
    Ok(report)
}
