//! Dirac-type operators `D = -i(ρ_1 ∂_1 + ρ_2 ∂_2) + iR + Q` with
//! `ρ_i = Σ_j Φ_ij σ_j`, their metric data, and gauge factors `μ`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::domain::{boundary_trace, DomainSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, cx, CMat};
use crate::mesh::Point;
use crate::profile::RadialProfile;

pub type Mat2 = [[f64; 2]; 2];

/// Evaluation point; `triangle` is needed only by per-triangle data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub x: Point,
    pub triangle: Option<usize>,
}

impl Sample {
    pub fn at(x: Point) -> Self {
        Self { x, triangle: None }
    }
}

fn polar_coords(x: Point, center: Point) -> (f64, Point, Point) {
    let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
    let r = dx.hypot(dy);
    (r, [dx / r, dy / r], [-dy / r, dx / r])
}

fn matmul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn det2(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Riemannian metric, given through its inverse `g^{ij}` in Cartesian coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricSpec {
    Euclidean,
    /// `dr² + dφ²` about `center`.
    CylinderPolar {
        #[serde(default)]
        center: Point,
    },
    /// Inverse metric `g^{rr}(r) ∂_r² + g^{φφ}(r) ∂_φ²` about `center`.
    RadialConformal {
        #[serde(default)]
        center: Point,
        g_rr: RadialProfile,
        g_pp: RadialProfile,
    },
    /// Constant `[g^{11}, g^{12}, g^{22}]` on each triangle.
    PerTriangleConstant { inverse_metrics: Vec<[f64; 3]> },
}

/// Polar chart data `(g^{rr}, d/dr g^{rr}, g^{φφ}, d/dr g^{φφ})`.
pub type PolarMetric = (f64, f64, f64, f64);

impl MetricSpec {
    pub fn center(&self) -> Option<Point> {
        match self {
            MetricSpec::CylinderPolar { center } | MetricSpec::RadialConformal { center, .. } => Some(*center),
            _ => None,
        }
    }

    /// Inverse metric in the polar chart about `center`, if the metric is
    /// rotationally symmetric about it.
    pub fn polar_components(&self, center: Point, r: f64) -> Option<PolarMetric> {
        match self {
            MetricSpec::Euclidean => Some((1.0, 0.0, 1.0 / (r * r), -2.0 / (r * r * r))),
            MetricSpec::CylinderPolar { center: c } if *c == center => Some((1.0, 0.0, 1.0, 0.0)),
            MetricSpec::RadialConformal { center: c, g_rr, g_pp } if *c == center => {
                let (a, da) = g_rr.eval(r);
                let (b, db) = g_pp.eval(r);
                Some((a, da, b, db))
            }
            _ => None,
        }
    }

    fn polar_at(&self, x: Point) -> Option<(f64, Point, Point, PolarMetric)> {
        let center = self.center()?;
        let (r, rhat, that) = polar_coords(x, center);
        Some((r, rhat, that, self.polar_components(center, r)?))
    }

    fn triangle_data(&self, s: Sample) -> Result<[f64; 3]> {
        let MetricSpec::PerTriangleConstant { inverse_metrics } = self else { unreachable!() };
        let t = s.triangle.ok_or_else(|| Error::InvalidInput("per-triangle metric needs a triangle".into()))?;
        inverse_metrics
            .get(t)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("no metric for triangle {t}")))
    }

    /// `g^{ij}` at a point.
    pub fn inverse_metric(&self, s: Sample) -> Result<Mat2> {
        match self {
            MetricSpec::Euclidean => Ok([[1.0, 0.0], [0.0, 1.0]]),
            MetricSpec::PerTriangleConstant { .. } => {
                let [a, b, c] = self.triangle_data(s)?;
                Ok([[a, b], [b, c]])
            }
            _ => {
                let (r, rh, th, (grr, _, gpp, _)) = self.polar_at(s.x).unwrap();
                let angular = gpp * r * r;
                Ok(std::array::from_fn(|i| std::array::from_fn(|j| grr * rh[i] * rh[j] + angular * th[i] * th[j])))
            }
        }
    }

    /// `√det g_ij` in Cartesian coordinates.
    pub fn sqrt_g(&self, s: Sample) -> Result<f64> {
        match self {
            MetricSpec::Euclidean => Ok(1.0),
            MetricSpec::PerTriangleConstant { .. } => {
                let [a, b, c] = self.triangle_data(s)?;
                Ok(1.0 / (a * c - b * b).sqrt())
            }
            _ => {
                let (r, _, _, (grr, _, gpp, _)) = self.polar_at(s.x).unwrap();
                Ok(1.0 / (r * (grr * gpp).sqrt()))
            }
        }
    }

    /// Gradient of `ln √g` in Cartesian coordinates.
    pub fn grad_log_sqrt_g(&self, s: Sample) -> Result<Point> {
        match self {
            MetricSpec::Euclidean | MetricSpec::PerTriangleConstant { .. } => Ok([0.0, 0.0]),
            _ => {
                let (r, rh, _, (grr, dgrr, gpp, dgpp)) = self.polar_at(s.x).unwrap();
                let d = -1.0 / r - 0.5 * dgrr / grr - 0.5 * dgpp / gpp;
                Ok([d * rh[0], d * rh[1]])
            }
        }
    }

    pub fn validate(&self, domain: &DomainSpec) -> Result<()> {
        let check_center = |center: Point| {
            if domain.contains(center) {
                Err(Error::InvalidInput("polar metric centered inside the domain".into()))
            } else {
                Ok(())
            }
        };
        match self {
            MetricSpec::Euclidean => Ok(()),
            MetricSpec::CylinderPolar { center } => check_center(*center),
            MetricSpec::RadialConformal { center, g_rr, g_pp } => {
                g_rr.validate()?;
                g_pp.validate()?;
                check_center(*center)
            }
            MetricSpec::PerTriangleConstant { inverse_metrics } => {
                for (t, &[a, b, c]) in inverse_metrics.iter().enumerate() {
                    if !(a > 0.0 && a * c - b * b > 0.0) {
                        return Err(Error::InvalidInput(format!("metric on triangle {t} not positive definite")));
                    }
                }
                Ok(())
            }
        }
    }
}

/// The frame field `Φ`, with `det Φ > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PhiField {
    Identity,
    Constant { matrix: Mat2 },
    /// `constant + x₁ dx + x₂ dy`
    Affine { constant: Mat2, dx: Mat2, dy: Mat2 },
    /// Constant matrix `polar` in the polar chart about `center`, i.e.
    /// `Φ = J · polar` with `J = [r̂ | r t̂]`.
    PolarFrame {
        #[serde(default)]
        center: Point,
        polar: Mat2,
    },
}

impl PhiField {
    pub fn value(&self, x: Point) -> Mat2 {
        match self {
            PhiField::Identity => [[1.0, 0.0], [0.0, 1.0]],
            PhiField::Constant { matrix } => *matrix,
            PhiField::Affine { constant, dx, dy } => {
                std::array::from_fn(|i| std::array::from_fn(|j| constant[i][j] + x[0] * dx[i][j] + x[1] * dy[i][j]))
            }
            PhiField::PolarFrame { center, polar } => {
                let (px, py) = (x[0] - center[0], x[1] - center[1]);
                let r = px.hypot(py);
                matmul2(&[[px / r, -py], [py / r, px]], polar)
            }
        }
    }

    /// `(∂_1 Φ, ∂_2 Φ)`.
    pub fn partials(&self, x: Point) -> [Mat2; 2] {
        match self {
            PhiField::Identity | PhiField::Constant { .. } => [[[0.0; 2]; 2]; 2],
            PhiField::Affine { dx, dy, .. } => [*dx, *dy],
            PhiField::PolarFrame { center, polar } => {
                let (px, py) = (x[0] - center[0], x[1] - center[1]);
                let r = px.hypot(py);
                let r3 = r * r * r;
                let djx = [[1.0 / r - px * px / r3, 0.0], [-px * py / r3, 1.0]];
                let djy = [[-px * py / r3, -1.0], [1.0 / r - py * py / r3, 0.0]];
                [matmul2(&djx, polar), matmul2(&djy, polar)]
            }
        }
    }

    pub fn det(&self, x: Point) -> f64 {
        det2(&self.value(x))
    }
}

/// Complex matrix in config form: rows of entries, each a real number or `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixSpec(pub Vec<Vec<Entry>>);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> c64 {
        match self {
            Entry::Real(v) => cx(v, 0.0),
            Entry::Complex([re, im]) => cx(re, im),
        }
    }
}

impl MatrixSpec {
    pub fn from_cmat(m: &CMat) -> Self {
        MatrixSpec(
            (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| {
                            let z = m[(i, j)];
                            if z.im == 0.0 {
                                Entry::Real(z.re)
                            } else {
                                Entry::Complex([z.re, z.im])
                            }
                        })
                        .collect()
                })
                .collect(),
        )
    }

    pub fn scalar(v: f64) -> Self {
        MatrixSpec(vec![vec![Entry::Real(v)]])
    }

    pub fn to_cmat(&self) -> Result<CMat> {
        let n = self.0.len();
        if self.0.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInput("matrix must be square".into()));
        }
        Ok(CMat::from_fn(n, n, |i, j| self.0[i][j].value()))
    }

    pub fn to_hermitian(&self, dim: usize) -> Result<CMat> {
        let m = self.to_cmat()?;
        if m.nrows() != dim {
            return Err(Error::LengthMismatch { left: m.nrows(), right: dim });
        }
        let defect = linalg::hermitian_defect(&m);
        if defect > 1e-12 {
            return Err(Error::NotHermitian { defect });
        }
        Ok(linalg::hermitian_part(&m))
    }
}

/// Zeroth-order Hermitian potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialField {
    #[default]
    Zero,
    Constant { matrix: MatrixSpec },
    /// `μ D μ⁻¹ - D` for the given gauge factor.
    Gauge { gauge: GaugeField },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Winding {
    #[default]
    Trivial,
    /// `e^{iwφ}` with `φ` the polar angle about `center`.
    AngularPower {
        w: i64,
        #[serde(default)]
        center: Point,
    },
    /// `Π ((z - c_j)/|z - c_j|)^{w_j}`.
    WindingProduct { centers: Vec<Point>, exponents: Vec<i64> },
}

/// Zero-winding phase `Σ_k c_k |x - center|^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialPhase {
    #[serde(default)]
    pub center: Point,
    pub coeffs: Vec<f64>,
}

impl RadialPhase {
    fn eval(&self, r: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            v += c * r.powi(k as i32);
            if k > 0 {
                d += c * k as f64 * r.powi(k as i32 - 1);
            }
        }
        (v, d)
    }
}

/// Unimodular gauge factor `μ = e^{i(phase + radial(r) + Σ w_j arg(z - c_j))}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct GaugeField {
    #[serde(default)]
    pub winding: Winding,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub radial: Option<RadialPhase>,
}

impl GaugeField {
    pub fn angular(w: i64) -> Self {
        Self { winding: Winding::AngularPower { w, center: [0.0, 0.0] }, ..Default::default() }
    }

    pub fn product_of(centers: Vec<Point>, exponents: Vec<i64>) -> Self {
        Self { winding: Winding::WindingProduct { centers, exponents }, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if let Winding::WindingProduct { centers, exponents } = &self.winding {
            if centers.len() != exponents.len() {
                return Err(Error::LengthMismatch { left: centers.len(), right: exponents.len() });
            }
        }
        Ok(())
    }

    pub fn factors(&self) -> Vec<(Point, i64)> {
        match &self.winding {
            Winding::Trivial => Vec::new(),
            Winding::AngularPower { w, center } => vec![(*center, *w)],
            Winding::WindingProduct { centers, exponents } => {
                centers.iter().copied().zip(exponents.iter().copied()).collect()
            }
        }
    }

    /// Real phase of `μ(x)` (principal branch for each winding factor).
    pub fn angle(&self, x: Point) -> f64 {
        let mut a = self.phase;
        for (c, w) in self.factors() {
            a += w as f64 * (x[1] - c[1]).atan2(x[0] - c[0]);
        }
        if let Some(rp) = &self.radial {
            a += rp.eval((x[0] - rp.center[0]).hypot(x[1] - rp.center[1])).0;
        }
        a
    }

    pub fn value(&self, x: Point) -> c64 {
        let a = self.angle(x);
        cx(a.cos(), a.sin())
    }

    /// `∇ arg μ`, smooth away from the centers.
    pub fn phase_gradient(&self, x: Point) -> Point {
        let mut g = [0.0, 0.0];
        for (c, w) in self.factors() {
            let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
            let r2 = dx * dx + dy * dy;
            g[0] -= w as f64 * dy / r2;
            g[1] += w as f64 * dx / r2;
        }
        if let Some(rp) = &self.radial {
            let (dx, dy) = (x[0] - rp.center[0], x[1] - rp.center[1]);
            let r = dx.hypot(dy);
            let d = rp.eval(r).1;
            g[0] += d * dx / r;
            g[1] += d * dy / r;
        }
        g
    }

    /// Pointwise product `self · other`. Radial phases must share a center.
    pub fn product(&self, other: &GaugeField) -> Result<GaugeField> {
        let mut factors = self.factors();
        for (c, w) in other.factors() {
            match factors.iter_mut().find(|(c0, _)| *c0 == c) {
                Some(f) => f.1 += w,
                None => factors.push((c, w)),
            }
        }
        factors.retain(|f| f.1 != 0);
        let radial = match (&self.radial, &other.radial) {
            (None, r) | (r, None) => r.clone(),
            (Some(a), Some(b)) => {
                if a.center != b.center {
                    return Err(Error::InvalidInput("radial phases about different centers".into()));
                }
                let n = a.coeffs.len().max(b.coeffs.len());
                let get = |v: &Vec<f64>, k: usize| v.get(k).copied().unwrap_or(0.0);
                Some(RadialPhase { center: a.center, coeffs: (0..n).map(|k| get(&a.coeffs, k) + get(&b.coeffs, k)).collect() })
            }
        };
        let winding = if factors.is_empty() {
            Winding::Trivial
        } else {
            let (centers, exponents) = factors.into_iter().unzip();
            Winding::WindingProduct { centers, exponents }
        };
        Ok(GaugeField { winding, phase: self.phase + other.phase, radial })
    }

    /// Total winding about `center` contributed by factors centered there.
    pub fn winding_about(&self, center: Point) -> i64 {
        self.factors().into_iter().filter(|(c, _)| *c == center).map(|(_, w)| w).sum()
    }

    pub fn check_centers_outside(&self, domain: &DomainSpec) -> Result<()> {
        for (c, w) in self.factors() {
            if w != 0 && domain.contains(c) {
                return Err(Error::CenterInsideDomain { x: c[0], y: c[1] });
            }
        }
        if let Some(rp) = &self.radial {
            if domain.contains(rp.center) {
                return Err(Error::CenterInsideDomain { x: rp.center[0], y: rp.center[1] });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    /// Block size: the bundle has rank `2N`.
    pub n: usize,
    pub metric: MetricSpec,
    pub phi: PhiField,
    #[serde(default)]
    pub q_base: PotentialField,
}

impl OperatorSpec {
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn validate(&self, domain: &DomainSpec) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("block size N must be >= 1".into()));
        }
        self.metric.validate(domain)?;
        if let PhiField::PolarFrame { center, polar } = &self.phi {
            if domain.contains(*center) || det2(polar) <= 0.0 {
                return Err(Error::InvalidInput("polar frame must be centered outside the domain with det > 0".into()));
            }
        } else if let Some(p) = probe_points(domain).into_iter().find(|p| self.phi.det(*p) <= 0.0) {
            return Err(Error::InvalidInput(format!("det Φ <= 0 at ({}, {})", p[0], p[1])));
        }
        match &self.q_base {
            PotentialField::Constant { matrix } => {
                matrix.to_hermitian(self.dim())?;
            }
            PotentialField::Gauge { gauge } => gauge.check_centers_outside(domain)?,
            PotentialField::Zero => {}
        }
        Ok(())
    }

    pub fn rho(&self, x: Point) -> [CMat; 2] {
        rho_from(&self.phi.value(x), self.n)
    }

    pub fn symbol(&self, x: Point, xi: Point) -> CMat {
        symbol(&self.phi, self.n, x, xi)
    }

    pub fn r_term(&self, s: Sample) -> Result<CMat> {
        r_phi(&self.phi, &self.metric, self.n, s)
    }

    /// `μ D μ⁻¹ - D = -(a_1 ρ_1 + a_2 ρ_2)` with `a = ∇ arg μ`.
    pub fn gauge_potential(&self, gauge: &GaugeField, x: Point) -> CMat {
        let a = gauge.phase_gradient(x);
        let [r1, r2] = self.rho(x);
        linalg::scale_re(&(&linalg::scale_re(&r1, a[0]) + &linalg::scale_re(&r2, a[1])), -1.0)
    }

    pub fn potential(&self, field: &PotentialField, s: Sample) -> Result<CMat> {
        match field {
            PotentialField::Zero => Ok(linalg::zeros(self.dim(), self.dim())),
            PotentialField::Constant { matrix } => matrix.to_hermitian(self.dim()),
            PotentialField::Gauge { gauge } => Ok(self.gauge_potential(gauge, s.x)),
        }
    }

    pub fn base_potential(&self, s: Sample) -> Result<CMat> {
        self.potential(&self.q_base, s)
    }

    /// Unit conormal (covector killing the tangent) from a Euclidean normal.
    pub fn conormal(&self, s: Sample, normal: Point) -> Result<Point> {
        let g = self.metric.inverse_metric(s)?;
        let q = normal[0] * (g[0][0] * normal[0] + g[0][1] * normal[1])
            + normal[1] * (g[1][0] * normal[0] + g[1][1] * normal[1]);
        let len = q.sqrt();
        Ok([normal[0] / len, normal[1] / len])
    }

    /// `n' = n'_1 + i n'_2` with `(n'_1, n'_2) = (n_1, n_2) Φ`.
    pub fn n_prime(&self, x: Point, conormal: Point) -> c64 {
        let phi = self.phi.value(x);
        cx(
            conormal[0] * phi[0][0] + conormal[1] * phi[1][0],
            conormal[0] * phi[0][1] + conormal[1] * phi[1][1],
        )
    }
}

fn probe_points(domain: &DomainSpec) -> Vec<Point> {
    match domain {
        DomainSpec::Annulus { r_in, r_out, center } => (0..8)
            .flat_map(|k| {
                let a = TAU * k as f64 / 8.0;
                [*r_in, 0.5 * (r_in + r_out), *r_out].map(|r| [center[0] + r * a.cos(), center[1] + r * a.sin()])
            })
            .collect(),
        DomainSpec::DisjointUnion(parts) => parts.iter().flat_map(probe_points).collect(),
        DomainSpec::Meshed(m) => m.nodes().to_vec(),
    }
}

fn rho_from(phi: &Mat2, n: usize) -> [CMat; 2] {
    let (s1, s2) = (linalg::sigma1(n), linalg::sigma2(n));
    std::array::from_fn(|i| &linalg::scale_re(&s1, phi[i][0]) + &linalg::scale_re(&s2, phi[i][1]))
}

/// Principal symbol `ξ_1 ρ_1 + ξ_2 ρ_2`.
pub fn symbol(phi: &PhiField, n: usize, x: Point, xi: Point) -> CMat {
    let [r1, r2] = rho_from(&phi.value(x), n);
    &linalg::scale_re(&r1, xi[0]) + &linalg::scale_re(&r2, xi[1])
}

/// Symmetrizing term `R = -½ (1/√g) Σ_i ∂_i(√g ρ_i)`, so that
/// `-iρ_i∂_i + iR` is formally symmetric in `L²(√g dx)`.
pub fn r_phi(phi: &PhiField, metric: &MetricSpec, n: usize, s: Sample) -> Result<CMat> {
    let grad = metric.grad_log_sqrt_g(s)?;
    let value = phi.value(s.x);
    let partials = phi.partials(s.x);
    // Σ_i [(∂_i ln√g) Φ_ij + ∂_i Φ_ij] multiplies σ_j.
    let coef: [f64; 2] =
        std::array::from_fn(|j| (0..2).map(|i| grad[i] * value[i][j] + partials[i][i][j]).sum::<f64>());
    let (s1, s2) = (linalg::sigma1(n), linalg::sigma2(n));
    Ok(&linalg::scale_re(&s1, -0.5 * coef[0]) + &linalg::scale_re(&s2, -0.5 * coef[1]))
}

/// The potential `Q_1 = μ D μ⁻¹ - D` as a field, after checking that every
/// winding center lies outside the domain.
#[derive(Clone, Debug)]
pub struct GaugePotential {
    op: OperatorSpec,
    gauge: GaugeField,
}

impl GaugePotential {
    pub fn eval(&self, x: Point) -> CMat {
        self.op.gauge_potential(&self.gauge, x)
    }
}

pub fn gauge_q1(gauge: &GaugeField, op: &OperatorSpec, domain: &DomainSpec) -> Result<GaugePotential> {
    gauge.validate()?;
    gauge.check_centers_outside(domain)?;
    Ok(GaugePotential { op: op.clone(), gauge: gauge.clone() })
}

/// Degree of `μ` restricted to one boundary component, traversed in positive
/// orientation. Samples double until every phase increment is below π/2.
pub fn winding_degree(gauge: &GaugeField, domain: &DomainSpec, component: usize) -> Result<i64> {
    gauge.check_centers_outside(domain)?;
    let mut n = 64;
    while n <= 1 << 20 {
        let pts = boundary_trace(domain, component, n)?;
        let values: Vec<c64> = pts.iter().map(|p| gauge.value(p.position)).collect();
        let mut total = 0.0;
        let mut ok = true;
        for k in 0..values.len() {
            let inc = (values[(k + 1) % values.len()] * values[k].conj()).arg();
            if inc.abs() >= PI / 2.0 {
                ok = false;
                break;
            }
            total += inc;
        }
        let turns = total / TAU;
        if ok && (turns - turns.round()).abs() < 1e-6 {
            return Ok(turns.round() as i64);
        }
        // Meshed traces subdivide edges, so asking for more samples refines them.
        n *= 2;
    }
    Err(Error::NonConvergentWinding { component })
}

pub fn degrees_vector(gauge: &GaugeField, domain: &DomainSpec) -> Result<Vec<i64>> {
    let degrees = (1..=domain.num_components())
        .map(|c| winding_degree(gauge, domain, c))
        .collect::<Result<Vec<_>>>()?;
    if degrees.iter().sum::<i64>() != 0 {
        return Err(Error::DegreesNotSumZero(degrees));
    }
    Ok(degrees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_annulus, make_annulus_at};
    use crate::linalg::{max_abs_diff, sigma1, sigma2};

    fn polar_op() -> OperatorSpec {
        OperatorSpec {
            n: 1,
            metric: MetricSpec::CylinderPolar { center: [0.0, 0.0] },
            phi: PhiField::PolarFrame { center: [0.0, 0.0], polar: [[1.0, 0.0], [0.0, 1.0]] },
            q_base: PotentialField::Zero,
        }
    }

    #[test]
    fn symbol_examples() {
        let s = symbol(&PhiField::Identity, 1, [0.3, 0.4], [1.0, 0.0]);
        assert!(max_abs_diff(&s, &sigma1(1)) < 1e-15);
        let phi = PhiField::Constant { matrix: [[2.0, 0.0], [0.0, 1.0]] };
        let s = symbol(&phi, 1, [0.3, 0.4], [1.0, 1.0]);
        assert!(max_abs_diff(&s, &(&linalg::scale_re(&sigma1(1), 2.0) + &sigma2(1))) < 1e-15);
    }

    #[test]
    fn symbol_squares_to_metric_norm_for_orthonormal_frame() {
        // For Φ = I in the Euclidean plane, σ(ξ)² = |ξ|².
        let s = symbol(&PhiField::Identity, 2, [0.0, 0.0], [0.6, -1.1]);
        let sq = &s * &s;
        assert!(max_abs_diff(&sq, &linalg::scale_re(&linalg::identity(4), 0.36 + 1.21)) < 1e-14);
    }

    #[test]
    fn r_phi_examples() {
        let r = r_phi(&PhiField::Identity, &MetricSpec::Euclidean, 1, Sample::at([0.5, 0.5])).unwrap();
        assert!(linalg::max_abs(&r) < 1e-15);
        let phi = PhiField::Affine { constant: [[1.0, 0.0], [0.0, 1.0]], dx: [[1.0, 0.0], [0.0, 0.0]], dy: [[0.0; 2]; 2] };
        let r = r_phi(&phi, &MetricSpec::Euclidean, 1, Sample::at([0.2, 0.1])).unwrap();
        assert!(max_abs_diff(&r, &linalg::scale_re(&sigma1(1), -0.5)) < 1e-15);
    }

    #[test]
    fn r_phi_matches_finite_difference_divergence() {
        let metric = MetricSpec::RadialConformal {
            center: [0.0, 0.0],
            g_rr: RadialProfile::Power { coef: 1.0, exponent: 0.5 },
            g_pp: RadialProfile::Power { coef: 2.0, exponent: -2.0 },
        };
        let phi = PhiField::PolarFrame { center: [0.0, 0.0], polar: [[1.0, 0.3], [-0.2, 0.8]] };
        let x = [1.1, 0.7];
        let h = 1e-5;
        let weighted = |p: Point, i: usize| {
            let sg = metric.sqrt_g(Sample::at(p)).unwrap();
            linalg::scale_re(&rho_from(&phi.value(p), 1)[i], sg)
        };
        let mut div = linalg::zeros(2, 2);
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            div = &div + &linalg::scale_re(&(&weighted(xp, i) - &weighted(xm, i)), 1.0 / (2.0 * h));
        }
        let sg = metric.sqrt_g(Sample::at(x)).unwrap();
        let expected = linalg::scale_re(&div, -0.5 / sg);
        let got = r_phi(&phi, &metric, 1, Sample::at(x)).unwrap();
        assert!(max_abs_diff(&got, &expected) < 1e-8);
    }

    #[test]
    fn cylinder_metric_in_cartesian() {
        let m = MetricSpec::CylinderPolar { center: [0.0, 0.0] };
        let s = Sample::at([0.0, 2.0]);
        let g = m.inverse_metric(s).unwrap();
        // r̂ = ŷ, t̂ = -x̂
        assert!((g[0][0] - 4.0).abs() < 1e-14 && (g[1][1] - 1.0).abs() < 1e-14 && g[0][1].abs() < 1e-14);
        assert!((m.sqrt_g(s).unwrap() - 0.5).abs() < 1e-15);
        let e = MetricSpec::RadialConformal {
            center: [0.0, 0.0],
            g_rr: RadialProfile::Constant { value: 1.0 },
            g_pp: RadialProfile::Power { coef: 1.0, exponent: -2.0 },
        };
        let g = e.inverse_metric(Sample::at([0.3, 1.4])).unwrap();
        assert!((g[0][0] - 1.0).abs() < 1e-14 && g[0][1].abs() < 1e-14 && (g[1][1] - 1.0).abs() < 1e-14);
        assert!((e.sqrt_g(Sample::at([0.3, 1.4])).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn polar_frame_pulls_back_to_cartesian() {
        let phi = PhiField::PolarFrame { center: [0.0, 0.0], polar: [[1.0, 0.0], [0.0, 1.0]] };
        let (r, a) = (1.5f64, 0.7f64);
        let v = phi.value([r * a.cos(), r * a.sin()]);
        assert!((v[0][0] - a.cos()).abs() < 1e-14);
        assert!((v[0][1] + r * a.sin()).abs() < 1e-14);
        assert!((v[1][0] - a.sin()).abs() < 1e-14);
        assert!((v[1][1] - r * a.cos()).abs() < 1e-14);
        let x = [1.1, -0.4];
        let h = 1e-6;
        let p = phi.partials(x);
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let (vp, vm) = (phi.value(xp), phi.value(xm));
            for i in 0..2 {
                for j in 0..2 {
                    assert!(((vp[i][j] - vm[i][j]) / (2.0 * h) - p[k][i][j]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn annulus_gauge_potential_is_constant_sigma2() {
        let op = polar_op();
        let g = GaugeField::angular(1);
        for &(r, a) in &[(1.0f64, 0.0f64), (1.7, 2.0), (2.0, -1.0)] {
            let q = op.gauge_potential(&g, [r * a.cos(), r * a.sin()]);
            assert!(max_abs_diff(&q, &linalg::scale_re(&sigma2(1), -1.0)) < 1e-14);
        }
    }

    #[test]
    fn annulus_data_has_no_r_term() {
        let op = polar_op();
        let r = op.r_term(Sample::at([1.2, 0.9])).unwrap();
        assert!(linalg::max_abs(&r) < 1e-14);
    }

    #[test]
    fn degrees_of_angular_power() {
        let d = make_annulus(1.0, 2.0).unwrap();
        assert_eq!(degrees_vector(&GaugeField::angular(1), &d).unwrap(), vec![-1, 1]);
        assert_eq!(degrees_vector(&GaugeField::angular(-3), &d).unwrap(), vec![3, -3]);
        let off = GaugeField::product_of(vec![[5.0, 0.0]], vec![2]);
        assert_eq!(degrees_vector(&off, &d).unwrap(), vec![0, 0]);
    }

    #[test]
    fn center_inside_domain_rejected() {
        let d = make_annulus(1.0, 2.0).unwrap();
        let g = GaugeField::product_of(vec![[1.5, 0.0]], vec![1]);
        assert!(matches!(gauge_q1(&g, &polar_op(), &d), Err(Error::CenterInsideDomain { .. })));
        let d2 = make_annulus_at(1.0, 2.0, [4.0, 0.0]).unwrap();
        assert!(matches!(winding_degree(&GaugeField::angular(1), &d2, 1), Ok(0)));
    }

    #[test]
    fn conormal_image_on_annulus() {
        let op = polar_op();
        let x = [0.0, -2.0];
        let n = op.conormal(Sample::at(x), [0.0, -1.0]).unwrap();
        assert!((op.n_prime(x, n) - c64::ONE).norm() < 1e-14);
        let x = [-1.0, 0.0];
        let n = op.conormal(Sample::at(x), [1.0, 0.0]).unwrap();
        assert!((op.n_prime(x, n) + c64::ONE).norm() < 1e-14);
    }
}
