//! Local elliptic boundary conditions `i n' u⁺ = B u⁻` and the translation of
//! graphene-type (Akhmerov–Beenakker) boundary data into that form.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, c64, cx, CMat, I};
use crate::operator::{degrees_vector, GaugeField, MatrixSpec};

/// `B(τ) = B₀ + cos(2πτ) B_c + sin(2πτ) B_s` along a component, `τ ∈ [0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMatrix {
    constant: CMat,
    cos: Option<CMat>,
    sin: Option<CMat>,
}

impl BoundaryMatrix {
    pub fn constant(b: CMat) -> Self {
        Self { constant: b, cos: None, sin: None }
    }

    pub fn harmonic(constant: CMat, cos: CMat, sin: CMat) -> Self {
        Self { constant, cos: Some(cos), sin: Some(sin) }
    }

    pub fn is_constant(&self) -> bool {
        self.cos.is_none() && self.sin.is_none()
    }

    pub fn eval(&self, tau: f64) -> CMat {
        let mut b = self.constant.clone();
        if let Some(c) = &self.cos {
            b = &b + &linalg::scale_re(c, (TAU * tau).cos());
        }
        if let Some(s) = &self.sin {
            b = &b + &linalg::scale_re(s, (TAU * tau).sin());
        }
        b
    }

    pub fn scaled(&self, factor: f64) -> BoundaryMatrix {
        let f = |m: &CMat| linalg::scale_re(m, factor);
        BoundaryMatrix { constant: f(&self.constant), cos: self.cos.as_ref().map(f), sin: self.sin.as_ref().map(f) }
    }

    /// `diag(self, other)`; harmonic parts missing on one side count as zero.
    pub fn direct_sum(&self, other: &BoundaryMatrix) -> BoundaryMatrix {
        let part = |a: &Option<CMat>, na: usize, b: &Option<CMat>, nb: usize| -> Option<CMat> {
            if a.is_none() && b.is_none() {
                return None;
            }
            let a = a.clone().unwrap_or_else(|| linalg::zeros(na, na));
            let b = b.clone().unwrap_or_else(|| linalg::zeros(nb, nb));
            Some(linalg::block_diag(&a, &b))
        };
        let (na, nb) = (self.constant.nrows(), other.constant.nrows());
        BoundaryMatrix {
            constant: linalg::block_diag(&self.constant, &other.constant),
            cos: part(&self.cos, na, &other.cos, nb),
            sin: part(&self.sin, na, &other.sin, nb),
        }
    }
}

const SIGN_SAMPLES: usize = 64;

/// One Hermitian invertible `N × N` matrix field per boundary component.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCondition {
    n: usize,
    components: Vec<BoundaryMatrix>,
}

impl BoundaryCondition {
    pub fn new(n: usize, components: Vec<BoundaryMatrix>, inv_tol: f64) -> Result<Self> {
        let mut out = Vec::with_capacity(components.len());
        for (idx, comp) in components.into_iter().enumerate() {
            let clean = |m: &CMat| -> Result<CMat> {
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::LengthMismatch { left: m.nrows(), right: n });
                }
                let defect = linalg::hermitian_defect(m);
                if defect > 1e-12 {
                    return Err(Error::NotHermitian { defect });
                }
                Ok(linalg::hermitian_part(m))
            };
            let comp = BoundaryMatrix {
                constant: clean(&comp.constant)?,
                cos: comp.cos.as_ref().map(clean).transpose()?,
                sin: comp.sin.as_ref().map(clean).transpose()?,
            };
            check_component(&comp, idx + 1, inv_tol)?;
            out.push(comp);
        }
        Ok(Self { n, components: out })
    }

    /// `N = 1` with a constant real value on each component.
    pub fn scalar(values: &[f64], inv_tol: f64) -> Result<Self> {
        let comps = values.iter().map(|&v| BoundaryMatrix::constant(linalg::real_diag(&[v]))).collect();
        Self::new(1, comps, inv_tol)
    }

    /// Constant matrices, one per component.
    pub fn constant(n: usize, matrices: Vec<CMat>, inv_tol: f64) -> Result<Self> {
        Self::new(n, matrices.into_iter().map(BoundaryMatrix::constant).collect(), inv_tol)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, component: usize) -> Result<&BoundaryMatrix> {
        component
            .checked_sub(1)
            .and_then(|i| self.components.get(i))
            .ok_or(Error::UnknownComponent(component))
    }

    pub fn at(&self, component: usize, tau: f64) -> Result<CMat> {
        Ok(self.component(component)?.eval(tau))
    }

    pub fn negative_count(&self, component: usize) -> Result<usize> {
        negative_count(&self.component(component)?.eval(0.0))
    }

    pub fn direct_sum(&self, other: &BoundaryCondition, inv_tol: f64) -> Result<Self> {
        if self.num_components() != other.num_components() {
            return Err(Error::LengthMismatch { left: self.num_components(), right: other.num_components() });
        }
        let comps = self.components.iter().zip(&other.components).map(|(a, b)| a.direct_sum(b)).collect();
        Self::new(self.n + other.n, comps, inv_tol)
    }

    pub fn check_domain(&self, domain: &DomainSpec) -> Result<()> {
        if self.num_components() != domain.num_components() {
            return Err(Error::LengthMismatch { left: self.num_components(), right: domain.num_components() });
        }
        Ok(())
    }
}

fn check_component(comp: &BoundaryMatrix, component: usize, inv_tol: f64) -> Result<()> {
    let samples = if comp.is_constant() { 1 } else { SIGN_SAMPLES };
    let mut count = None;
    for k in 0..samples {
        let eig = linalg::hermitian_eigenvalues(&comp.eval(k as f64 / samples as f64))?;
        let sigma_min = eig.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if sigma_min < inv_tol {
            return Err(Error::NotInvertible { sigma_min });
        }
        let neg = eig.iter().filter(|&&v| v < 0.0).count();
        match count {
            None => count = Some(neg),
            Some(c) if c != neg => return Err(Error::SignChangeOnComponent { component }),
            _ => {}
        }
    }
    Ok(())
}

/// Number of negative eigenvalues of a Hermitian matrix.
pub fn negative_count(b: &CMat) -> Result<usize> {
    let defect = linalg::hermitian_defect(b);
    if defect > 1e-12 {
        return Err(Error::NotHermitian { defect });
    }
    Ok(linalg::hermitian_eigenvalues(b)?.into_iter().filter(|&v| v < 0.0).count())
}

/// `b̂`: negative counts on all components, in label order.
pub fn b_vector(bc: &BoundaryCondition) -> Result<Vec<usize>> {
    (1..=bc.num_components()).map(|c| bc.negative_count(c)).collect()
}

/// Boundary involution `M` whose `+1` eigenspace is `{i n u⁺ = B u⁻}`.
/// `n` need not be unit; it is absorbed into `B`.
pub fn m_from_b(b: &CMat, n: c64) -> Result<CMat> {
    let len = n.norm();
    if len < 1e-14 {
        return Err(Error::InvalidInput("conormal image vanishes".into()));
    }
    let dim = b.nrows();
    let bt = linalg::scale_re(b, 1.0 / len);
    let nh = n / len;
    let id = linalg::identity(dim);
    let b2 = &bt * &bt;
    let inv = linalg::inverse(&(&id + &b2), 1e-14)?;
    let rhs = linalg::blocks(
        &id,
        &linalg::scale(&bt, I * nh.conj()),
        &linalg::scale(&bt, -I * nh),
        &b2,
    );
    let zero = linalg::zeros(dim, dim);
    let left = linalg::blocks(&inv, &zero, &zero, &inv);
    Ok(&linalg::identity(2 * dim) - &linalg::scale_re(&(&left * &rhs), 2.0))
}

/// Basis `[-i n⁻¹ B; I]` of the subspace `{i n u⁺ = B u⁻}`.
pub fn bc_subspace(b: &CMat, n: c64) -> CMat {
    let dim = b.nrows();
    let top = linalg::scale(b, -I / n);
    CMat::from_fn(2 * dim, dim, |i, j| {
        if i < dim {
            top[(i, j)]
        } else if i - dim == j {
            c64::ONE
        } else {
            c64::ZERO
        }
    })
}

/// Graphene-type boundary data: mixing angle `Λ`, frame angle `φ` and unit valley vector `ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbBoundaryData {
    pub lambda: f64,
    pub phi: f64,
    pub nu: [f64; 3],
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn unit3(v: [f64; 3]) -> Result<[f64; 3]> {
    let len = dot3(v, v).sqrt();
    if len < 1e-12 {
        return Err(Error::InvalidInput("zero vector".into()));
    }
    Ok(v.map(|c| c / len))
}

impl AbBoundaryData {
    pub fn new(lambda: f64, phi: f64, nu: [f64; 3]) -> Result<Self> {
        Ok(Self { lambda, phi, nu: unit3(nu)? })
    }

    /// From an explicit frame `(n_B, n_1, n_2)`, with `n_B` the in-plane
    /// boundary normal. Negatively oriented frames are normalized by
    /// `(Λ, n_1) → (-Λ, -n_1)`.
    pub fn from_frame(lambda: f64, n_b: [f64; 3], n1: [f64; 3], n2: [f64; 3], nu: [f64; 3]) -> Result<Self> {
        let (n_b, mut n1, n2) = (unit3(n_b)?, unit3(n1)?, unit3(n2)?);
        if dot3(n_b, n1).abs() > 1e-9 || dot3(n_b, n2).abs() > 1e-9 || dot3(n1, n2).abs() > 1e-9 {
            return Err(Error::InvalidInput("frame is not orthonormal".into()));
        }
        let mut lambda = lambda;
        if dot3(cross3(n_b, n1), n2) < 0.0 {
            lambda = -lambda;
            n1 = n1.map(|c| -c);
        }
        let eta = cross3([0.0, 0.0, 1.0], n_b);
        let phi = (-n1[2]).atan2(dot3(n1, eta));
        Self::new(lambda, phi, nu)
    }

    /// `S = ν·τ` on the two-dimensional valley space.
    pub fn valley_matrix(&self) -> CMat {
        let [a, b, c] = self.nu;
        linalg::from_rows(&[&[cx(c, 0.0), cx(a, -b)], &[cx(a, b), cx(-c, 0.0)]])
    }
}

fn distance_to_multiple(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    r.min(period - r)
}

/// `Λ ± φ ≢ 0 (mod π)`.
pub fn ab_is_elliptic(lambda: f64, phi: f64, ell_tol: f64) -> bool {
    distance_to_multiple(lambda + phi, PI) > ell_tol && distance_to_multiple(lambda - phi, PI) > ell_tol
}

/// `#{s ∈ {Λ+φ, Λ-φ} : s mod 2π ∈ (π, 2π)}`.
pub fn ab_b_count(lambda: f64, phi: f64) -> usize {
    [lambda + phi, lambda - phi]
        .into_iter()
        .filter(|s| {
            let r = s.rem_euclid(TAU);
            r > PI && r < TAU
        })
        .count()
}

#[derive(Clone, Debug)]
pub struct AbTranslation {
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub b: CMat,
}

/// `B = β₊ P₊ + β₋ P₋` with `P± = (1 ± S)/2`, `β₊ = cot((Λ+φ)/2)`, `β₋ = tan((Λ-φ)/2)`.
pub fn ab_to_b(data: &AbBoundaryData, ell_tol: f64) -> Result<AbTranslation> {
    if !ab_is_elliptic(data.lambda, data.phi, ell_tol) {
        return Err(Error::NotElliptic { lambda: data.lambda, phi: data.phi });
    }
    let beta_plus = 1.0 / (0.5 * (data.lambda + data.phi)).tan();
    let beta_minus = (0.5 * (data.lambda - data.phi)).tan();
    let s = data.valley_matrix();
    let id = linalg::identity(2);
    let p_plus = linalg::scale_re(&(&id + &s), 0.5);
    let p_minus = linalg::scale_re(&(&id - &s), 0.5);
    let b = &linalg::scale_re(&p_plus, beta_plus) + &linalg::scale_re(&p_minus, beta_minus);
    Ok(AbTranslation { beta_plus, beta_minus, b })
}

/// The boundary involution in block form `[[S₁, -i n̄ S₂], [i n S₂, -S₁]]`.
pub fn ab_m_matrix(data: &AbBoundaryData, n: c64) -> CMat {
    let s = data.valley_matrix();
    let id = linalg::identity(2);
    let (sl, cl) = data.lambda.sin_cos();
    let (sp, cp) = data.phi.sin_cos();
    let s1 = &linalg::scale_re(&id, -sp * sl) + &linalg::scale_re(&s, cp * cl);
    let s2 = &linalg::scale_re(&id, cp * sl) + &linalg::scale_re(&s, sp * cl);
    linalg::blocks(&s1, &linalg::scale(&s2, -I * n.conj()), &linalg::scale(&s2, I * n), &linalg::scale_re(&s1, -1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeReversalPrediction {
    pub b_hat: Vec<usize>,
    pub mu_hat: Vec<i64>,
    pub predicted: i64,
}

/// With `Λ ≡ 0` on every component, each `b_j = 1`, so the predicted flow is
/// `Σ μ_j = 0` for every gauge factor.
pub fn ab_time_reversal_predict(
    domain: &DomainSpec,
    gauge: &GaugeField,
    data: &[AbBoundaryData],
    ell_tol: f64,
) -> Result<TimeReversalPrediction> {
    if data.len() != domain.num_components() {
        return Err(Error::LengthMismatch { left: data.len(), right: domain.num_components() });
    }
    for d in data {
        if distance_to_multiple(d.lambda, TAU) > 1e-12 {
            return Err(Error::InvalidInput(format!("Λ = {} is not time-reversal invariant", d.lambda)));
        }
        if !ab_is_elliptic(d.lambda, d.phi, ell_tol) {
            return Err(Error::NotElliptic { lambda: d.lambda, phi: d.phi });
        }
    }
    let b_hat: Vec<usize> = data.iter().map(|d| ab_b_count(d.lambda, d.phi)).collect();
    let mu_hat = degrees_vector(gauge, domain)?;
    let predicted = b_hat.iter().zip(&mu_hat).map(|(&b, &m)| b as i64 * m).sum();
    Ok(TimeReversalPrediction { b_hat, mu_hat, predicted })
}

/// Serializable description of one component's boundary matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ComponentBoundarySpec {
    /// Real scalar multiple of the identity.
    Scalar { value: f64 },
    Matrix {
        constant: MatrixSpec,
        #[serde(default)]
        cos: Option<MatrixSpec>,
        #[serde(default)]
        sin: Option<MatrixSpec>,
    },
    /// Graphene-type data; requires `N = 2`.
    Ab { lambda: f64, phi: f64, nu: [f64; 3] },
}

impl ComponentBoundarySpec {
    pub fn to_matrix(&self, n: usize, ell_tol: f64) -> Result<BoundaryMatrix> {
        match self {
            ComponentBoundarySpec::Scalar { value } => Ok(BoundaryMatrix::constant(linalg::real_diag(&vec![*value; n]))),
            ComponentBoundarySpec::Matrix { constant, cos, sin } => {
                let c = constant.to_cmat()?;
                match (cos, sin) {
                    (None, None) => Ok(BoundaryMatrix::constant(c)),
                    _ => {
                        let zero = linalg::zeros(c.nrows(), c.ncols());
                        let cm = cos.as_ref().map(|m| m.to_cmat()).transpose()?.unwrap_or_else(|| zero.clone());
                        let sm = sin.as_ref().map(|m| m.to_cmat()).transpose()?.unwrap_or(zero);
                        Ok(BoundaryMatrix::harmonic(c, cm, sm))
                    }
                }
            }
            ComponentBoundarySpec::Ab { lambda, phi, nu } => {
                if n != 2 {
                    return Err(Error::InvalidInput("graphene boundary data needs N = 2".into()));
                }
                let data = AbBoundaryData::new(*lambda, *phi, *nu)?;
                Ok(BoundaryMatrix::constant(ab_to_b(&data, ell_tol)?.b))
            }
        }
    }
}

pub fn boundary_from_specs(n: usize, specs: &[ComponentBoundarySpec], inv_tol: f64, ell_tol: f64) -> Result<BoundaryCondition> {
    let comps = specs.iter().map(|s| s.to_matrix(n, ell_tol)).collect::<Result<Vec<_>>>()?;
    BoundaryCondition::new(n, comps, inv_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, sigma2};

    #[test]
    fn negative_count_examples() {
        assert_eq!(negative_count(&linalg::real_diag(&[1.0, -2.0, 3.0])).unwrap(), 1);
        assert_eq!(negative_count(&linalg::identity(4)).unwrap(), 0);
        let not_h = linalg::from_rows(&[&[c64::ONE, I], &[I, c64::ONE]]);
        assert!(matches!(negative_count(&not_h), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn m_from_b_at_identity_is_sigma2() {
        let m = m_from_b(&linalg::identity(1), c64::ONE).unwrap();
        assert!(max_abs_diff(&m, &sigma2(1)) < 1e-15);
    }

    #[test]
    fn m_from_b_is_involution_with_bc_eigenspace() {
        let b = linalg::from_rows(&[&[cx(0.5, 0.0), cx(0.2, -0.7)], &[cx(0.2, 0.7), cx(-1.5, 0.0)]]);
        let n = cx(0.6, 0.8);
        let m = m_from_b(&b, n).unwrap();
        assert!(max_abs_diff(&(&m * &m), &linalg::identity(4)) < 1e-13);
        assert!(linalg::hermitian_defect(&m) < 1e-13);
        let w = bc_subspace(&b, n);
        assert!(max_abs_diff(&(&m * &w), &w) < 1e-13);
    }

    #[test]
    fn identity_bc_eigenvector() {
        let n = cx(0.0, 1.0);
        let m = m_from_b(&linalg::identity(2), n).unwrap();
        let v = CMat::from_fn(4, 1, |i, _| [-I * n.conj(), c64::ZERO, c64::ONE, c64::ZERO][i]);
        assert!(max_abs_diff(&(&m * &v), &v) < 1e-14);
    }

    #[test]
    fn rejects_singular_and_sign_changing() {
        assert!(matches!(BoundaryCondition::scalar(&[1.0, 0.0], 1e-8), Err(Error::NotInvertible { .. })));
        let flip = BoundaryMatrix::harmonic(linalg::real_diag(&[0.0]), linalg::real_diag(&[1.0]), linalg::real_diag(&[0.0]));
        let r = BoundaryCondition::new(1, vec![flip], 1e-8);
        assert!(matches!(r, Err(Error::NotInvertible { .. }) | Err(Error::SignChangeOnComponent { .. })));
        let flip = BoundaryMatrix::harmonic(linalg::real_diag(&[0.1]), linalg::real_diag(&[1.0]), linalg::real_diag(&[0.0]));
        assert!(matches!(BoundaryCondition::new(1, vec![flip], 1e-8), Err(Error::SignChangeOnComponent { .. })));
    }

    #[test]
    fn b_vector_of_scalar_condition() {
        let bc = BoundaryCondition::scalar(&[1.0, -1.0], 1e-8).unwrap();
        assert_eq!(b_vector(&bc).unwrap(), vec![0, 1]);
    }

    #[test]
    fn ab_examples() {
        assert!(!ab_is_elliptic(0.0, 0.0, 1e-6));
        assert!(ab_is_elliptic(0.0, PI / 2.0, 1e-6));
        assert_eq!(ab_b_count(0.0, PI / 2.0), 1);
        assert_eq!(ab_b_count(PI / 4.0, PI / 2.0), 1);
        assert_eq!(ab_b_count(PI / 2.0, PI / 4.0), 0);
        assert_eq!(ab_b_count(1.5 * PI, 0.25 * PI), 2);
        assert!(matches!(ab_to_b(&AbBoundaryData::new(0.0, 0.0, [0.0, 0.0, 1.0]).unwrap(), 1e-6), Err(Error::NotElliptic { .. })));
        let t = ab_to_b(&AbBoundaryData::new(0.0, PI / 2.0, [0.0, 0.0, 1.0]).unwrap(), 1e-6).unwrap();
        assert!((t.beta_plus - 1.0).abs() < 1e-14 && (t.beta_minus + 1.0).abs() < 1e-14);
        assert_eq!(negative_count(&t.b).unwrap(), 1);
    }

    #[test]
    fn ab_block_form_equals_m_from_b() {
        let d = AbBoundaryData::new(0.7, 1.9, [0.3, -0.4, 0.5]).unwrap();
        let n = cx(0.28, -0.96);
        let t = ab_to_b(&d, 1e-6).unwrap();
        assert!(max_abs_diff(&ab_m_matrix(&d, n), &m_from_b(&t.b, n).unwrap()) < 1e-12);
    }

    #[test]
    fn frame_normalization_flips_negative_orientation() {
        let nb = [1.0, 0.0, 0.0];
        let eta = [0.0, 1.0, 0.0];
        let e3 = [0.0, 0.0, 1.0];
        let phi = 0.4f64;
        let n1 = [0.0, phi.cos(), -phi.sin()];
        let n2 = [0.0, phi.sin(), phi.cos()];
        let d = AbBoundaryData::from_frame(0.3, nb, n1, n2, e3).unwrap();
        assert!((d.lambda - 0.3).abs() < 1e-14 && (d.phi - phi).abs() < 1e-14);
        let d = AbBoundaryData::from_frame(0.3, nb, n1, n2.map(|c| -c), e3).unwrap();
        assert!((d.lambda + 0.3).abs() < 1e-14);
        let _ = eta;
    }
}
