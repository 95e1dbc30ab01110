//! A complete flow problem: domain, operator, boundary condition and the
//! path of potentials `t ↦ Q_t`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::boundary::{b_vector, BoundaryCondition};
use crate::domain::{make_annulus, DomainSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::operator::{degrees_vector, GaugeField, MatrixSpec, MetricSpec, OperatorSpec, PhiField, PotentialField, Sample};

/// Path of potentials added to the operator's base potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialPath {
    /// `t Q_1` with `Q_1 = μ D μ⁻¹ - D`.
    GaugeLinear { gauge: GaugeField },
    /// `t^p Q_1`.
    Reparametrized { gauge: GaugeField, exponent: f64 },
    /// `t Q_1 + sin(πt) V` for a constant Hermitian `V`; same endpoints as
    /// the linear path and homotopic to it.
    Detour { gauge: GaugeField, bump: MatrixSpec },
    /// Piecewise-linear interpolation of constant potentials at `knots`.
    UserPath { knots: Vec<f64>, potentials: Vec<MatrixSpec> },
}

impl PotentialPath {
    pub fn gauge(&self) -> Option<&GaugeField> {
        match self {
            PotentialPath::GaugeLinear { gauge }
            | PotentialPath::Reparametrized { gauge, .. }
            | PotentialPath::Detour { gauge, .. } => Some(gauge),
            PotentialPath::UserPath { .. } => None,
        }
    }

    /// Coefficient of `Q_1` at time `t`.
    pub fn gauge_weight(&self, t: f64) -> f64 {
        match self {
            PotentialPath::GaugeLinear { .. } | PotentialPath::Detour { .. } => t,
            PotentialPath::Reparametrized { exponent, .. } => t.max(0.0).powf(*exponent),
            PotentialPath::UserPath { .. } => 0.0,
        }
    }

    /// Constant (position independent) part of the path at time `t`.
    pub fn constant_part(&self, t: f64, dim: usize) -> Result<Option<CMat>> {
        match self {
            PotentialPath::Detour { bump, .. } => {
                Ok(Some(linalg::scale_re(&bump.to_hermitian(dim)?, (PI * t).sin())))
            }
            PotentialPath::UserPath { knots, potentials } => {
                let k = knots.partition_point(|&x| x <= t).clamp(1, knots.len() - 1);
                let (t0, t1) = (knots[k - 1], knots[k]);
                let f = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
                let a = potentials[k - 1].to_hermitian(dim)?;
                let b = potentials[k].to_hermitian(dim)?;
                Ok(Some(&linalg::scale_re(&a, 1.0 - f) + &linalg::scale_re(&b, f)))
            }
            _ => Ok(None),
        }
    }

    fn validate(&self, op: &OperatorSpec, domain: &DomainSpec) -> Result<()> {
        if let Some(g) = self.gauge() {
            g.validate()?;
            g.check_centers_outside(domain)?;
        }
        match self {
            PotentialPath::Detour { bump, .. } => {
                bump.to_hermitian(op.dim())?;
            }
            PotentialPath::UserPath { knots, potentials } => {
                if knots.len() != potentials.len() {
                    return Err(Error::LengthMismatch { left: knots.len(), right: potentials.len() });
                }
                if knots.len() < 2 || knots.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidInput("user path needs >= 2 increasing knots".into()));
                }
                for p in potentials {
                    p.to_hermitian(op.dim())?;
                }
            }
            PotentialPath::Reparametrized { exponent, .. } if *exponent <= 0.0 => {
                return Err(Error::InvalidInput("reparametrization exponent must be positive".into()));
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FlowProblem {
    pub domain: DomainSpec,
    pub operator: OperatorSpec,
    pub boundary: BoundaryCondition,
    pub path: PotentialPath,
}

impl FlowProblem {
    pub fn new(domain: DomainSpec, operator: OperatorSpec, boundary: BoundaryCondition, path: PotentialPath) -> Result<Self> {
        operator.validate(&domain)?;
        boundary.check_domain(&domain)?;
        if boundary.n() != operator.n {
            return Err(Error::LengthMismatch { left: boundary.n(), right: operator.n });
        }
        path.validate(&operator, &domain)?;
        Ok(Self { domain, operator, boundary, path })
    }

    /// Annulus `1 <= r <= 2` with metric `dr² + dφ²`, `N = 1`, `μ = e^{iφ}`,
    /// `B = +1` inside and `-1` outside.
    pub fn annulus_example() -> Self {
        Self::polar_annulus(1.0, 2.0, 1, 1.0, -1.0).expect("fixed example is valid")
    }

    /// Cylinder-metric annulus with scalar boundary values and gauge `e^{iwφ}`.
    pub fn polar_annulus(r_in: f64, r_out: f64, w: i64, b_in: f64, b_out: f64) -> Result<Self> {
        let domain = make_annulus(r_in, r_out)?;
        let operator = OperatorSpec {
            n: 1,
            metric: MetricSpec::CylinderPolar { center: [0.0, 0.0] },
            phi: PhiField::PolarFrame { center: [0.0, 0.0], polar: [[1.0, 0.0], [0.0, 1.0]] },
            q_base: PotentialField::Zero,
        };
        let boundary = BoundaryCondition::scalar(&[b_in, b_out], 1e-8)?;
        Self::new(domain, operator, boundary, PotentialPath::GaugeLinear { gauge: GaugeField::angular(w) })
    }

    pub fn with_path(&self, path: PotentialPath) -> Result<Self> {
        Self::new(self.domain.clone(), self.operator.clone(), self.boundary.clone(), path)
    }

    /// `Q_base + w(t) Q_1 + constant part`.
    pub fn potential(&self, s: Sample, t: f64) -> Result<CMat> {
        let mut q = self.operator.base_potential(s)?;
        if let Some(g) = self.path.gauge() {
            let weight = self.path.gauge_weight(t);
            if weight != 0.0 {
                q = &q + &linalg::scale_re(&self.operator.gauge_potential(g, s.x), weight);
            }
        }
        if let Some(c) = self.path.constant_part(t, self.operator.dim())? {
            q = &q + &c;
        }
        Ok(q)
    }

    /// Block direct sum of two problems sharing domain, metric, frame and
    /// gauge path; base potentials and boundary matrices are stacked.
    pub fn direct_sum(&self, other: &FlowProblem) -> Result<Self> {
        let (a, b) = (&self.operator, &other.operator);
        if self.domain != other.domain || a.metric != b.metric || a.phi != b.phi {
            return Err(Error::InvalidInput("direct sum needs a common domain, metric and frame".into()));
        }
        let path = match (&self.path, &other.path) {
            (p @ (PotentialPath::GaugeLinear { .. } | PotentialPath::Reparametrized { .. }), q) if p == q => p.clone(),
            _ => return Err(Error::InvalidInput("direct sum needs the same pure gauge path".into())),
        };
        let q_base = match (&a.q_base, &b.q_base) {
            (PotentialField::Zero, PotentialField::Zero) => PotentialField::Zero,
            (PotentialField::Gauge { gauge: g }, PotentialField::Gauge { gauge: h }) if g == h => a.q_base.clone(),
            (p, q) => {
                let as_matrix = |f: &PotentialField, op: &OperatorSpec| -> Result<CMat> {
                    match f {
                        PotentialField::Zero => Ok(linalg::zeros(op.dim(), op.dim())),
                        PotentialField::Constant { matrix } => matrix.to_hermitian(op.dim()),
                        PotentialField::Gauge { .. } => {
                            Err(Error::InvalidInput("cannot stack a gauge potential with a different one".into()))
                        }
                    }
                };
                let m = linalg::spinor_direct_sum(&as_matrix(p, a)?, a.n, &as_matrix(q, b)?, b.n);
                PotentialField::Constant { matrix: MatrixSpec::from_cmat(&m) }
            }
        };
        let operator = OperatorSpec { n: a.n + b.n, metric: a.metric.clone(), phi: a.phi.clone(), q_base };
        let boundary = self.boundary.direct_sum(&other.boundary, 1e-8)?;
        Self::new(self.domain.clone(), operator, boundary, path)
    }

    pub fn b_hat(&self) -> Result<Vec<usize>> {
        b_vector(&self.boundary)
    }

    pub fn mu_hat(&self) -> Result<Option<Vec<i64>>> {
        self.path.gauge().map(|g| degrees_vector(g, &self.domain)).transpose()
    }
}
