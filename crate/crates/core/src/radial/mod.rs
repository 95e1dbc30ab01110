//! Rotationally symmetric annuli: separation into angular modes, shooting
//! for each mode, and the closed-form spectrum of the reference annulus.

mod coarse;
mod shooting;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, c64, cx, CMat, I};
use crate::mesh::Point;
use crate::operator::{GaugeField, Mat2, MetricSpec, PhiField, PotentialField, RadialPhase, Winding};
use crate::problem::{FlowProblem, PotentialPath};
use crate::spectrum::{Provenance, SliceSolver, SpectrumSlice};

use coarse::CoarseModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootingOptions {
    pub eig_tol: f64,
    /// Initial λ scan spacing.
    pub scan_step: f64,
    /// Local error tolerance of the Dormand–Prince integrator.
    pub ode_tol: f64,
    /// Grid points of the coarse completeness model.
    pub coarse_points: usize,
    /// Relative slack `e` in the completeness bracket.
    pub completeness_slack: f64,
    pub max_scan_halvings: usize,
    pub max_modes: i64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            eig_tol: 1e-8,
            scan_step: 0.05,
            ode_tol: 1e-12,
            coarse_points: 256,
            completeness_slack: 0.05,
            max_scan_halvings: 4,
            max_modes: 512,
        }
    }
}

/// One angular mode restricted to one scalar block: the ODE
/// `-iρ_r u' + (κ ρ_φ + c_r(r) ρ_r + iR(r) + q) u = λ u` on `[r_in, r_out]`
/// with `u⁺ = -i b u⁻ / n'` at both ends.
#[derive(Clone, Debug)]
pub struct ModeBlock {
    pub k: i64,
    pub block: usize,
    pub r_in: f64,
    pub r_out: f64,
    center: Point,
    metric: MetricSpec,
    /// Frame in the polar chart: row 0 gives `ρ_r`, row 1 gives `ρ_φ`.
    pub frame: Mat2,
    pub kappa: f64,
    radial_terms: Vec<(f64, RadialPhase)>,
    pub q: [[c64; 2]; 2],
    pub b_in: f64,
    pub b_out: f64,
}

fn rho_2x2(row: [f64; 2]) -> [[c64; 2]; 2] {
    // row[0] σ₁ + row[1] σ₂
    [[c64::ZERO, cx(row[0], -row[1])], [cx(row[0], row[1]), c64::ZERO]]
}

impl ModeBlock {
    fn polar(&self, r: f64) -> (f64, f64, f64, f64) {
        self.metric.polar_components(self.center, r).expect("checked at reduction")
    }

    pub(crate) fn rho_r(&self) -> [[c64; 2]; 2] {
        rho_2x2(self.frame[0])
    }

    pub(crate) fn rho_phi(&self) -> [[c64; 2]; 2] {
        rho_2x2(self.frame[1])
    }

    /// `z = Φ_rr + iΦ_rφ`, the lower-left entry of `ρ_r`.
    pub(crate) fn z(&self) -> c64 {
        cx(self.frame[0][0], self.frame[0][1])
    }

    pub(crate) fn frame_phase(&self) -> c64 {
        let z = self.z();
        z / z.norm()
    }

    /// `√g` in the polar chart.
    pub(crate) fn sqrt_g(&self, r: f64) -> f64 {
        let (a, _, b, _) = self.polar(r);
        1.0 / (a * b).sqrt()
    }

    fn log_sqrt_g_prime(&self, r: f64) -> f64 {
        let (a, da, b, db) = self.polar(r);
        -0.5 * (da / a + db / b)
    }

    fn radial_coefficient(&self, r: f64) -> f64 {
        self.radial_terms
            .iter()
            .map(|(w, rp)| {
                let d: f64 = rp.coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64 * r.powi(k as i32 - 1)).sum();
                -w * d
            })
            .sum()
    }

    /// Scalar part `-(i c_r + ½ ℓ')` of the first-order system.
    pub(crate) fn scalar_rate(&self, r: f64) -> c64 {
        cx(-0.5 * self.log_sqrt_g_prime(r), -self.radial_coefficient(r))
    }

    pub(crate) fn r_matrix(&self, r: f64) -> [[c64; 2]; 2] {
        let f = -0.5 * self.log_sqrt_g_prime(r);
        self.rho_r().map(|row| row.map(|v| v * f))
    }

    /// Zeroth-order part `κρ_φ + c_r ρ_r + iR + q`.
    pub(crate) fn potential(&self, r: f64) -> [[c64; 2]; 2] {
        let rr = self.rho_r();
        let rp = self.rho_phi();
        let rm = self.r_matrix(r);
        let cr = self.radial_coefficient(r);
        std::array::from_fn(|i| std::array::from_fn(|j| rp[i][j] * self.kappa + rr[i][j] * cr + I * rm[i][j] + self.q[i][j]))
    }

    fn s(&self, r: f64) -> f64 {
        self.polar(r).0.sqrt()
    }

    /// `tan θ` imposed by the inner condition.
    pub(crate) fn tau_in(&self) -> f64 {
        -self.z().norm() / (self.s(self.r_in) * self.b_in)
    }

    pub(crate) fn tau_out(&self) -> f64 {
        self.z().norm() / (self.s(self.r_out) * self.b_out)
    }

    /// `u⁺ = c u⁻` at the inner and outer ends.
    pub(crate) fn endpoint_ratios(&self) -> (c64, c64) {
        let z = self.z();
        let c_in = I * self.b_in * self.s(self.r_in) / z;
        let c_out = -I * self.b_out * self.s(self.r_out) / z;
        (c_in, c_out)
    }
}

/// Rotation-invariant data of a problem, extracted once.
#[derive(Clone, Debug)]
pub struct RotationalData {
    r_in: f64,
    r_out: f64,
    center: Point,
    metric: MetricSpec,
    frame: Mat2,
    n: usize,
    base_winding: i64,
    base_radial: Option<RadialPhase>,
    base_constant: CMat,
    path: PotentialPath,
    path_winding: i64,
    path_radial: Option<RadialPhase>,
    b_in: Vec<f64>,
    b_out: Vec<f64>,
}

fn symmetric_gauge(gauge: &GaugeField, center: Point, what: &str) -> Result<(i64, Option<RadialPhase>)> {
    let w = match &gauge.winding {
        Winding::Trivial => 0,
        _ => {
            if gauge.factors().iter().any(|(c, w)| *w != 0 && *c != center) {
                return Err(Error::NotRotationallySymmetric(format!("{what} has a winding center off the annulus center")));
            }
            gauge.winding_about(center)
        }
    };
    if let Some(rp) = &gauge.radial {
        if rp.center != center {
            return Err(Error::NotRotationallySymmetric(format!("{what} radial phase is off-center")));
        }
    }
    Ok((w, gauge.radial.clone()))
}

fn diagonal(b: &CMat) -> Result<Vec<f64>> {
    let n = b.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j && b[(i, j)].norm() > 1e-14 {
                return Err(Error::NotRotationallySymmetric("boundary matrix couples blocks".into()));
            }
        }
    }
    Ok((0..n).map(|i| b[(i, i)].re).collect())
}

impl RotationalData {
    pub fn extract(problem: &FlowProblem) -> Result<Self> {
        let DomainSpec::Annulus { r_in, r_out, center } = problem.domain else {
            return Err(Error::NotRotationallySymmetric("domain is not a single annulus".into()));
        };
        let op = &problem.operator;
        if op.metric.polar_components(center, 0.5 * (r_in + r_out)).is_none() {
            return Err(Error::NotRotationallySymmetric("metric is not radial about the annulus center".into()));
        }
        let frame = match &op.phi {
            PhiField::PolarFrame { center: c, polar } if *c == center => *polar,
            _ => return Err(Error::NotRotationallySymmetric("Φ must be a constant frame in the polar chart".into())),
        };
        let (base_winding, base_radial, base_constant) = match &op.q_base {
            PotentialField::Zero => (0, None, linalg::zeros(op.dim(), op.dim())),
            PotentialField::Constant { matrix } => (0, None, matrix.to_hermitian(op.dim())?),
            PotentialField::Gauge { gauge } => {
                let (w, rp) = symmetric_gauge(gauge, center, "base gauge")?;
                (w, rp, linalg::zeros(op.dim(), op.dim()))
            }
        };
        let (path_winding, path_radial) = match problem.path.gauge() {
            Some(g) => symmetric_gauge(g, center, "path gauge")?,
            None => (0, None),
        };
        let mut ends = Vec::new();
        for comp in 1..=2 {
            let bm = problem.boundary.component(comp)?;
            if !bm.is_constant() {
                return Err(Error::NotRotationallySymmetric(format!("boundary matrix varies along component {comp}")));
            }
            ends.push(diagonal(&bm.eval(0.0))?);
        }
        let data = Self {
            r_in,
            r_out,
            center,
            metric: op.metric.clone(),
            frame,
            n: op.n,
            base_winding,
            base_radial,
            base_constant,
            path: problem.path.clone(),
            path_winding,
            path_radial,
            b_out: ends.pop().unwrap(),
            b_in: ends.pop().unwrap(),
        };
        data.constant_potential(0.0)?;
        Ok(data)
    }

    fn constant_potential(&self, t: f64) -> Result<CMat> {
        let mut q = self.base_constant.clone();
        if let Some(c) = self.path.constant_part(t, 2 * self.n)? {
            q = &q + &c;
        }
        let n = self.n;
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                for (i, j) in [(a, b), (a, n + b), (n + a, b), (n + a, n + b)] {
                    if q[(i, j)].norm() > 1e-14 {
                        return Err(Error::NotRotationallySymmetric("potential couples blocks".into()));
                    }
                }
            }
        }
        Ok(q)
    }

    /// Winding of the gauge driving the path, for the mode cutoff.
    pub fn path_winding(&self) -> i64 {
        self.path_winding
    }

    /// Scalar blocks of angular mode `k` at time `t`.
    pub fn blocks(&self, t: f64, k: i64) -> Result<Vec<ModeBlock>> {
        let weight = self.path.gauge_weight(t);
        let q = self.constant_potential(t)?;
        let kappa = k as f64 - self.base_winding as f64 - weight * self.path_winding as f64;
        let mut radial_terms = Vec::new();
        if let Some(rp) = &self.base_radial {
            radial_terms.push((1.0, rp.clone()));
        }
        if let Some(rp) = &self.path_radial {
            radial_terms.push((weight, rp.clone()));
        }
        let n = self.n;
        Ok((0..n)
            .map(|a| ModeBlock {
                k,
                block: a,
                r_in: self.r_in,
                r_out: self.r_out,
                center: self.center,
                metric: self.metric.clone(),
                frame: self.frame,
                kappa,
                radial_terms: radial_terms.clone(),
                q: [[q[(a, a)], q[(a, n + a)]], [q[(n + a, a)], q[(n + a, n + a)]]],
                b_in: self.b_in[a],
                b_out: self.b_out[a],
            })
            .collect())
    }
}

/// The mode problems of angular momentum `k` at time `t`.
pub fn reduce_to_modes(problem: &FlowProblem, t: f64, k: i64) -> Result<Vec<ModeBlock>> {
    RotationalData::extract(problem)?.blocks(t, k)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeSpectrum {
    /// `(λ, Prüfer index)`, ascending.
    pub eigenvalues: Vec<(f64, i64)>,
    pub scan_step: f64,
    /// Coarse counts `#{ν_h ≤ Λ²}` and `#{ν_h ≤ Λ²(1+e)}`.
    pub bracket: (usize, usize),
}

/// Eigenvalues of one mode block in `[-window, window]`, certified against
/// the coarse inertia counts (the scan step halves until they agree).
pub fn mode_eigenvalues(block: &ModeBlock, window: f64, opts: &ShootingOptions) -> Result<ModeSpectrum> {
    if window <= 0.0 {
        return Ok(ModeSpectrum { eigenvalues: Vec::new(), scan_step: opts.scan_step, bracket: (0, 0) });
    }
    let coarse = CoarseModel::assemble(block, opts.coarse_points, false);
    let lam2 = window * window;
    let bracket = (coarse.count_below(lam2 * (1.0 + 1e-12)), coarse.count_below(lam2 * (1.0 + opts.completeness_slack)));
    let mut step = opts.scan_step;
    for _ in 0..=opts.max_scan_halvings {
        let eigenvalues = shooting::scan_roots(block, -window, window, step, opts.ode_tol, opts.eig_tol)?;
        let n = eigenvalues.len();
        if bracket.0 <= n && n <= bracket.1 {
            return Ok(ModeSpectrum { eigenvalues, scan_step: step, bracket });
        }
        log::debug!("mode {} block {}: {n} roots outside bracket {:?}, halving scan step", block.k, block.block, bracket);
        step *= 0.5;
    }
    Err(Error::ScanResolutionExhausted { k: block.k })
}

/// Full spectrum in `[-window, window]` at time `t`, summed over modes
/// `|k| <= K`, where `K` grows until the sentinel modes `±K` are empty.
pub fn spectrum_at(problem: &FlowProblem, t: f64, window: f64, opts: &ShootingOptions) -> Result<SpectrumSlice> {
    let data = RotationalData::extract(problem)?;
    spectrum_from_data(&data, t, window, opts)
}

pub fn spectrum_from_data(data: &RotationalData, t: f64, window: f64, opts: &ShootingOptions) -> Result<SpectrumSlice> {
    let shift = data.base_winding.abs() + data.path_winding.abs();
    let mut k_max = (window + shift as f64 + 2.0).ceil() as i64;
    loop {
        if k_max > opts.max_modes {
            return Err(Error::ModeWindowTooSmall { k: k_max });
        }
        let mut sentinel_clear = true;
        for k in [-k_max, k_max] {
            for block in data.blocks(t, k)? {
                if !mode_eigenvalues(&block, window, opts)?.eigenvalues.is_empty() {
                    sentinel_clear = false;
                }
            }
        }
        if sentinel_clear {
            break;
        }
        k_max += 2;
    }
    let per_mode: Vec<Vec<(f64, Provenance)>> = (-k_max + 1..k_max)
        .into_par_iter()
        .map(|k| -> Result<Vec<(f64, Provenance)>> {
            let mut out = Vec::new();
            for block in data.blocks(t, k)? {
                for (v, index) in mode_eigenvalues(&block, window, opts)?.eigenvalues {
                    out.push((v, Provenance::Mode { k, block: block.block, index }));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(SpectrumSlice::new(t, window, per_mode.into_iter().flatten().collect(), opts.eig_tol, true))
}

/// Closed-form spectrum of the reference annulus problem
/// ([`FlowProblem::annulus_example`]): `λ = t - k` for every mode `k` and
/// `±√((k - t)² + (πl)²)`, `l >= 1`.
pub fn analytic_annulus_spectrum(t: f64, window: f64, eig_tol: f64) -> SpectrumSlice {
    let mut values = Vec::new();
    let k_lo = (t - window).floor() as i64 - 1;
    let k_hi = (t + window).ceil() as i64 + 1;
    for k in k_lo..=k_hi {
        values.push((t - k as f64, Provenance::Analytic { k, branch: 0 }));
        let kt = k as f64 - t;
        let mut l = 1i64;
        loop {
            let v = (kt * kt + (PI * l as f64).powi(2)).sqrt();
            if v > window + eig_tol {
                break;
            }
            values.push((v, Provenance::Analytic { k, branch: l }));
            values.push((-v, Provenance::Analytic { k, branch: -l }));
            l += 1;
        }
    }
    SpectrumSlice::new(t, window, values, eig_tol, true)
}

/// Succeeds when `problem` is exactly the closed-form annulus example.
pub fn check_oracle_configuration(problem: &FlowProblem) -> Result<()> {
    let reference = FlowProblem::annulus_example();
    let fail = |what: &str| Err(Error::NotOracleConfiguration(what.into()));
    if problem.domain != reference.domain {
        return fail("domain must be the annulus 1 <= r <= 2 about the origin");
    }
    if problem.operator != reference.operator {
        return fail("operator must be N = 1 with metric dr² + dφ² and the identity polar frame");
    }
    if problem.boundary != reference.boundary {
        return fail("boundary values must be +1 inside and -1 outside");
    }
    match &problem.path {
        PotentialPath::GaugeLinear { gauge } if gauge.factors() == reference.path.gauge().unwrap().factors() && gauge.radial.is_none() => Ok(()),
        _ => fail("path must be the linear gauge path for e^{iφ}"),
    }
}

/// Mode-sum shooting solver for a rotationally symmetric problem.
#[derive(Clone, Debug)]
pub struct RadialSolver {
    data: RotationalData,
    opts: ShootingOptions,
}

impl RadialSolver {
    pub fn new(problem: &FlowProblem, opts: ShootingOptions) -> Result<Self> {
        Ok(Self { data: RotationalData::extract(problem)?, opts })
    }
}

impl SliceSolver for RadialSolver {
    fn slice(&self, t: f64, window: f64) -> Result<SpectrumSlice> {
        spectrum_from_data(&self.data, t, window, &self.opts)
    }

    fn eig_tol(&self) -> f64 {
        self.opts.eig_tol
    }

    fn zero_tol(&self) -> f64 {
        self.opts.eig_tol
    }

    fn intrinsic_labels(&self) -> bool {
        true
    }

    fn name(&self) -> &'static str {
        "radial"
    }
}

/// Closed-form spectra of the reference annulus.
#[derive(Clone, Debug)]
pub struct OracleSolver {
    pub eig_tol: f64,
}

impl OracleSolver {
    pub fn new(problem: &FlowProblem, eig_tol: f64) -> Result<Self> {
        check_oracle_configuration(problem)?;
        Ok(Self { eig_tol })
    }
}

impl SliceSolver for OracleSolver {
    fn slice(&self, t: f64, window: f64) -> Result<SpectrumSlice> {
        Ok(analytic_annulus_spectrum(t, window, self.eig_tol))
    }

    fn eig_tol(&self) -> f64 {
        self.eig_tol
    }

    fn zero_tol(&self) -> f64 {
        self.eig_tol
    }

    fn intrinsic_labels(&self) -> bool {
        true
    }

    fn name(&self) -> &'static str {
        "oracle"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_block(t: f64, k: i64) -> ModeBlock {
        reduce_to_modes(&FlowProblem::annulus_example(), t, k).unwrap().remove(0)
    }

    #[test]
    fn mode_zero_at_t0() {
        let s = mode_eigenvalues(&example_block(0.0, 0), 4.0, &ShootingOptions::default()).unwrap();
        let v: Vec<f64> = s.eigenvalues.iter().map(|e| e.0).collect();
        assert_eq!(v.len(), 3);
        assert!((v[0] + PI).abs() < 1e-8 && v[1].abs() < 1e-8 && (v[2] - PI).abs() < 1e-8);
        let idx: Vec<i64> = s.eigenvalues.iter().map(|e| e.1).collect();
        assert_eq!(idx, vec![-1, 0, 1]);
    }

    #[test]
    fn mode_three_at_half() {
        let s = mode_eigenvalues(&example_block(0.5, 3), 5.0, &ShootingOptions::default()).unwrap();
        let v: Vec<f64> = s.eigenvalues.iter().map(|e| e.0).collect();
        let arc = (2.5f64 * 2.5 + PI * PI).sqrt();
        assert_eq!(v.len(), 3);
        assert!((v[0] + arc).abs() < 1e-8 && (v[1] + 2.5).abs() < 1e-8 && (v[2] - arc).abs() < 1e-8);
    }

    #[test]
    fn analytic_examples() {
        let s = analytic_annulus_spectrum(0.0, 0.5, 1e-8);
        assert_eq!(s.values(), vec![0.0]);
        let s = analytic_annulus_spectrum(0.5, 1.0, 1e-8);
        assert_eq!(s.values(), vec![-0.5, 0.5]);
        assert_eq!(s.grouped(1e-12), vec![(-0.5, 1), (0.5, 1)]);
    }

    #[test]
    fn oracle_configuration_detection() {
        assert!(check_oracle_configuration(&FlowProblem::annulus_example()).is_ok());
        let other = FlowProblem::polar_annulus(1.0, 2.0, 2, 1.0, -1.0).unwrap();
        assert!(matches!(check_oracle_configuration(&other), Err(Error::NotOracleConfiguration(_))));
    }

    #[test]
    fn coarse_counts_bracket_exact_counts() {
        let block = example_block(0.3, 1);
        let coarse = CoarseModel::assemble(&block, 256, false);
        // exact spectrum of mode 1 at t = 0.3: -0.7 and ±√(0.49 + π²l²)
        let arc1 = (0.49f64 + PI * PI).sqrt();
        assert_eq!(coarse.count_below(0.25), 0);
        assert_eq!(coarse.count_below(1.0), 1);
        assert_eq!(coarse.count_below(arc1 * arc1 * 0.999), 1);
        assert_eq!(coarse.count_below(arc1 * arc1 * 1.01), 3);
    }

    #[test]
    fn coarse_pencil_matches_dense_eigenvalues() {
        let block = example_block(0.3, 1);
        let coarse = CoarseModel::assemble(&block, 40, true);
        let (k, m) = coarse.dense();
        let l = m.llt(faer::Side::Lower).unwrap();
        let linv = l.L().to_owned();
        // L⁻¹ K L⁻* via triangular solves
        let mut x = k.clone();
        faer::linalg::triangular_solve::solve_lower_triangular_in_place(linv.as_ref(), x.as_mut(), faer::Par::Seq);
        let mut y = x.adjoint().to_owned();
        faer::linalg::triangular_solve::solve_lower_triangular_in_place(linv.as_ref(), y.as_mut(), faer::Par::Seq);
        let nu = linalg::hermitian_eigenvalues(&y).unwrap();
        for sigma in [0.3, 0.6, 5.0, 20.0, 60.0] {
            let dense_count = nu.iter().filter(|&&v| v < sigma).count();
            assert_eq!(coarse.count_below(sigma), dense_count, "σ = {sigma}");
        }
    }

    #[test]
    fn r_term_makes_weighted_galerkin_hermitian() {
        // √g = r in the polar chart: the Euclidean plane.
        let problem = FlowProblem::new(
            crate::domain::make_annulus(1.0, 2.0).unwrap(),
            crate::operator::OperatorSpec {
                n: 1,
                metric: MetricSpec::Euclidean,
                phi: PhiField::PolarFrame { center: [0.0, 0.0], polar: [[1.0, 0.0], [0.0, 1.0]] },
                q_base: PotentialField::Zero,
            },
            crate::boundary::BoundaryCondition::scalar(&[1.0, -1.0], 1e-8).unwrap(),
            PotentialPath::GaugeLinear { gauge: GaugeField::angular(1) },
        )
        .unwrap();
        let block = reduce_to_modes(&problem, 0.4, 2).unwrap().remove(0);
        let with_r = coarse::first_order_galerkin(&block, 30, true);
        let without_r = coarse::first_order_galerkin(&block, 30, false);
        assert!(linalg::hermitian_defect(&with_r) < 1e-12);
        assert!(linalg::hermitian_defect(&without_r) > 1e-3);
    }

    #[test]
    fn off_center_gauge_not_symmetric() {
        let p = FlowProblem::annulus_example()
            .with_path(PotentialPath::GaugeLinear { gauge: GaugeField::product_of(vec![[0.1, 0.0]], vec![1]) })
            .unwrap();
        assert!(matches!(reduce_to_modes(&p, 0.0, 0), Err(Error::NotRotationallySymmetric(_))));
    }
}
