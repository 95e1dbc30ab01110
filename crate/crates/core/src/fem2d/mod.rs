//! Linear finite elements for `(D + Q_t, B)` on triangle meshes.
//!
//! Each node carries `2N` spinor values. At boundary nodes the condition
//! `u⁺ = -i (n')⁻¹ B u⁻` is imposed strongly, leaving `u⁻` free. Three
//! Hermitian forms are assembled on the constrained space: the mass `M`
//! (weighted by `√g`), the symmetrized operator form `A = ½(G + G*)` with
//! `G = (φ_a, D φ_b)`, and the squared form `K = (D φ_a, D φ_b)`. The low
//! part of the pencil `(K, M)` spans a subspace on which `A` is diagonalized;
//! residuals of the form `‖(D - λ)u‖` reject polluted Ritz values.

mod eigen;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::bc_subspace;
use crate::domain::{mesh_annulus, DomainSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, CsrMatrix, I};
use crate::mesh::TriMesh;
use crate::operator::Sample;
use crate::problem::FlowProblem;
use crate::radial::{RadialSolver, ShootingOptions};
use crate::spectrum::{Provenance, SliceSolver, SpectrumSlice};

pub use eigen::{fem_spectrum, FemEigenpairs};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FemOptions {
    /// Mesh resolution used when the domain is given analytically.
    pub n_r: usize,
    pub n_phi: usize,
    /// Accepted residuals satisfy `‖(D - λ)u‖ / ‖u‖ ≤ res_tol (1 + |λ|)`.
    pub res_tol: f64,
    /// Reduced dimensions up to this size use a dense solve.
    pub dense_limit: usize,
    /// Endpoint eigenvalues below this magnitude count as zero.
    pub zero_tol: f64,
    pub eig_tol: f64,
    pub block_size: usize,
    pub max_basis: usize,
    /// Relative residual at which a squared-form Ritz pair is converged.
    pub krylov_tol: f64,
    /// `n'` below this magnitude is singular.
    pub inv_tol: f64,
    pub seed: u64,
}

impl Default for FemOptions {
    fn default() -> Self {
        Self {
            n_r: 40,
            n_phi: 160,
            res_tol: 0.25,
            dense_limit: 600,
            zero_tol: 0.02,
            eig_tol: 1e-10,
            block_size: 8,
            max_basis: 1200,
            krylov_tol: 1e-9,
            inv_tol: 1e-12,
            seed: 7,
        }
    }
}

/// Constrained linear-element discretization at one parameter value.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub t: f64,
    /// Symmetrized first-order form.
    pub a: CsrMatrix,
    /// `(D u, D v)`.
    pub k: CsrMatrix,
    pub mass: CsrMatrix,
    /// Unsymmetrized `(u, D v)`.
    pub g: CsrMatrix,
    n: usize,
    offsets: Vec<usize>,
    transforms: Vec<Option<CMat>>,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.a.nrows
    }

    /// `C` mapping free to nodal coefficients (`2N` per node).
    pub fn constraint_matrix(&self) -> CsrMatrix {
        let w = 2 * self.n;
        let mut trip = Vec::new();
        for (node, t) in self.transforms.iter().enumerate() {
            let off = self.offsets[node];
            match t {
                None => trip.extend((0..w).map(|c| (node * w + c, off + c, c64::ONE))),
                Some(t) => {
                    for i in 0..w {
                        for j in 0..t.ncols() {
                            trip.push((node * w + i, off + j, t[(i, j)]));
                        }
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.transforms.len() * w, self.dim(), trip)
    }
}

/// Per-node reduction `T` and reduced offsets.
fn node_transforms(mesh: &TriMesh, problem: &FlowProblem, opts: &FemOptions) -> Result<(Vec<Option<CMat>>, Vec<usize>)> {
    let op = &problem.operator;
    let mut incident = vec![usize::MAX; mesh.nodes().len()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for &v in tri {
            if incident[v] == usize::MAX {
                incident[v] = t;
            }
        }
    }
    let mut transforms = Vec::with_capacity(mesh.nodes().len());
    let mut offsets = Vec::with_capacity(mesh.nodes().len());
    let mut next = 0;
    for (node, &x) in mesh.nodes().iter().enumerate() {
        offsets.push(next);
        match mesh.boundary_position(node) {
            None => {
                transforms.push(None);
                next += 2 * op.n;
            }
            Some((label, tau)) => {
                let normal = mesh.node_normal(node).expect("boundary nodes have normals");
                let conormal = op.conormal(Sample { x, triangle: Some(incident[node]) }, normal)?;
                let n_prime = op.n_prime(x, conormal);
                if n_prime.norm() < opts.inv_tol {
                    return Err(Error::SingularNPrime { node });
                }
                let b = problem.boundary.at(label, tau)?;
                transforms.push(Some(bc_subspace(&b, n_prime)));
                next += op.n;
            }
        }
    }
    offsets.push(next);
    Ok((transforms, offsets))
}

/// Local data of one triangle: `√g |T|`, the constant gradient terms `P_b`
/// and the zeroth-order part `W = iR + Q_t` at the centroid.
struct Element {
    nodes: [usize; 3],
    weight: f64,
    grads: [CMat; 3],
    w: CMat,
}

fn element(mesh: &TriMesh, problem: &FlowProblem, tri: usize, t: f64) -> Result<Element> {
    let nodes = mesh.triangles()[tri];
    let p = nodes.map(|v| mesh.nodes()[v]);
    let area = mesh.triangle_area(tri);
    if area <= 0.0 {
        return Err(Error::MeshInvariantViolation(format!("triangle {tri} has non-positive area")));
    }
    let s = Sample { x: mesh.centroid(tri), triangle: Some(tri) };
    let op = &problem.operator;
    let weight = op.metric.sqrt_g(s)? * area;
    let [r1, r2] = op.rho(s.x);
    let grads = std::array::from_fn(|b| {
        let (q, r) = (p[(b + 1) % 3], p[(b + 2) % 3]);
        let gx = (q[1] - r[1]) / (2.0 * area);
        let gy = (r[0] - q[0]) / (2.0 * area);
        linalg::scale(&(&linalg::scale_re(&r1, gx) + &linalg::scale_re(&r2, gy)), -I)
    });
    let w = &linalg::scale(&op.r_term(s)?, I) + &problem.potential(s, t)?;
    Ok(Element { nodes, weight, grads, w })
}

fn reduce_block(x: &CMat, ta: Option<&CMat>, tb: Option<&CMat>) -> CMat {
    let left = match ta {
        Some(t) => linalg::mul(&linalg::adjoint(t), x),
        None => x.clone(),
    };
    match tb {
        Some(t) => linalg::mul(&left, t),
        None => left,
    }
}

type Triplets = Vec<(usize, usize, c64)>;

fn push_block(out: &mut Triplets, row: usize, col: usize, block: &CMat) {
    for i in 0..block.nrows() {
        for j in 0..block.ncols() {
            let v = block[(i, j)];
            if v != c64::ZERO {
                out.push((row + i, col + j, v));
            }
        }
    }
}

/// Assembles the constrained forms of `(D + Q_t, B)` on `mesh`.
pub fn assemble(mesh: &TriMesh, problem: &FlowProblem, t: f64, opts: &FemOptions) -> Result<DiscreteOperator> {
    if mesh.num_components() != problem.boundary.num_components() {
        return Err(Error::MeshInvariantViolation(format!(
            "mesh has {} boundary components, boundary data {}",
            mesh.num_components(),
            problem.boundary.num_components()
        )));
    }
    let n = problem.operator.n;
    let dim2 = 2 * n;
    let (transforms, offsets) = node_transforms(mesh, problem, opts)?;
    let id = linalg::identity(dim2);
    let local: Vec<[Triplets; 3]> = (0..mesh.triangles().len())
        .into_par_iter()
        .map(|tri| -> Result<[Triplets; 3]> {
            let el = element(mesh, problem, tri, t)?;
            let w_adj = linalg::adjoint(&el.w);
            let ww = &w_adj * &el.w;
            let mut out: [Triplets; 3] = Default::default();
            for a in 0..3 {
                for b in 0..3 {
                    let mass_f = if a == b { 2.0 } else { 1.0 } / 12.0;
                    let m = linalg::scale_re(&id, el.weight * mass_f);
                    let g = linalg::scale_re(&(&linalg::scale_re(&el.grads[b], 1.0 / 3.0) + &linalg::scale_re(&el.w, mass_f)), el.weight);
                    let pa = linalg::adjoint(&el.grads[a]);
                    let k = &(&pa * &el.grads[b]) + &linalg::scale_re(&(&(&pa * &el.w) + &(&w_adj * &el.grads[b])), 1.0 / 3.0);
                    let k = linalg::scale_re(&(&k + &linalg::scale_re(&ww, mass_f)), el.weight);
                    let (na, nb) = (el.nodes[a], el.nodes[b]);
                    let (ta, tb) = (transforms[na].as_ref(), transforms[nb].as_ref());
                    for (slot, x) in [m, g, k].iter().enumerate() {
                        push_block(&mut out[slot], offsets[na], offsets[nb], &reduce_block(x, ta, tb));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let dim = offsets[mesh.nodes().len()];
    let mut parts: [Triplets; 3] = Default::default();
    for l in local {
        for (p, v) in parts.iter_mut().zip(l) {
            p.extend(v);
        }
    }
    let [m, g, k] = parts;
    let mass = CsrMatrix::from_triplets(dim, dim, m);
    let g = CsrMatrix::from_triplets(dim, dim, g);
    let k = CsrMatrix::from_triplets(dim, dim, k);
    let g_adj = CsrMatrix::from_triplets(dim, dim, g.triplets().map(|(i, j, v)| (j, i, v.conj())).collect());
    let a = g.combine(0.5, &g_adj, 0.5);
    Ok(DiscreteOperator { t, a, k, mass, g, n, offsets: offsets[..mesh.nodes().len()].to_vec(), transforms })
}

/// Mesh on which a problem is discretized.
pub fn problem_mesh(problem: &FlowProblem, opts: &FemOptions) -> Result<Arc<TriMesh>> {
    match &problem.domain {
        DomainSpec::Meshed(m) => Ok(m.clone()),
        d => Ok(Arc::new(mesh_annulus(d, opts.n_r, opts.n_phi)?)),
    }
}

#[derive(Clone, Debug)]
pub struct FemSolver {
    problem: FlowProblem,
    mesh: Arc<TriMesh>,
    opts: FemOptions,
}

impl FemSolver {
    pub fn new(problem: &FlowProblem, opts: FemOptions) -> Result<Self> {
        let mesh = problem_mesh(problem, &opts)?;
        Ok(Self { problem: problem.clone(), mesh, opts })
    }

    pub fn with_mesh(problem: &FlowProblem, mesh: Arc<TriMesh>, opts: FemOptions) -> Self {
        Self { problem: problem.clone(), mesh, opts }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn assemble(&self, t: f64) -> Result<DiscreteOperator> {
        assemble(&self.mesh, &self.problem, t, &self.opts)
    }
}

impl SliceSolver for FemSolver {
    fn slice(&self, t: f64, window: f64) -> Result<SpectrumSlice> {
        let dop = self.assemble(t)?;
        fem_spectrum(&dop, window, &self.opts)
    }

    fn eig_tol(&self) -> f64 {
        self.opts.eig_tol
    }

    fn zero_tol(&self) -> f64 {
        self.opts.zero_tol
    }

    fn intrinsic_labels(&self) -> bool {
        false
    }

    fn name(&self) -> &'static str {
        "fem2d"
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementLevel {
    pub n_r: usize,
    pub n_phi: usize,
    pub dim: usize,
    pub values: Vec<f64>,
    /// Error of the nearest discrete value for each reference eigenvalue.
    pub errors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementReport {
    pub t: f64,
    pub window: f64,
    pub reference: Vec<f64>,
    pub levels: Vec<RefinementLevel>,
    /// Reference eigenvalues whose error did not shrink at every level.
    pub non_converging: Vec<f64>,
    /// Finest-level discrete values with no reference eigenvalue within 5%.
    pub spurious: Vec<f64>,
}

/// FEM spectra on a sequence of annulus meshes compared with the radial
/// solver on a rotationally symmetric problem.
pub fn refine_study(problem: &FlowProblem, resolutions: &[(usize, usize)], t: f64, window: f64, opts: &FemOptions) -> Result<RefinementReport> {
    let reference = RadialSolver::new(problem, ShootingOptions::default())?.slice(t, window)?.values();
    let mut levels = Vec::new();
    for &(n_r, n_phi) in resolutions {
        let level_opts = FemOptions { n_r, n_phi, ..opts.clone() };
        let solver = FemSolver::new(problem, level_opts.clone())?;
        let dop = solver.assemble(t)?;
        let values = fem_spectrum(&dop, window, &level_opts)?.values();
        let errors = reference
            .iter()
            .map(|r| values.iter().map(|v| (v - r).abs()).fold(f64::INFINITY, f64::min))
            .collect();
        levels.push(RefinementLevel { n_r, n_phi, dim: dop.dim(), values, errors });
    }
    let non_converging = reference
        .iter()
        .enumerate()
        .filter(|(i, _)| levels.windows(2).any(|w| w[1].errors[*i] > w[0].errors[*i]))
        .map(|(_, &r)| r)
        .collect();
    let spurious = levels
        .last()
        .map(|l| {
            l.values
                .iter()
                .copied()
                .filter(|v| reference.iter().all(|r| (v - r).abs() > 0.05 * r.abs().max(1.0)))
                .collect()
        })
        .unwrap_or_default();
    Ok(RefinementReport { t, window, reference, levels, non_converging, spurious })
}

/// Labels FEM eigenvalues by their position in the Ritz list.
pub(crate) fn fem_labels(n: usize) -> Vec<Provenance> {
    (0..n).map(|index| Provenance::Fem { index }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{GaugeField, MetricSpec, OperatorSpec, PhiField, PotentialField};
    use crate::problem::PotentialPath;

    fn example_dop(n_r: usize, n_phi: usize, t: f64) -> DiscreteOperator {
        let p = FlowProblem::annulus_example();
        let mesh = problem_mesh(&p, &FemOptions { n_r, n_phi, ..Default::default() }).unwrap();
        assemble(&mesh, &p, t, &FemOptions::default()).unwrap()
    }

    #[test]
    fn forms_are_hermitian() {
        let d = example_dop(4, 16, 0.3);
        let scale = linalg::max_abs(&d.k.to_dense());
        assert!(d.a.hermitian_defect() < 1e-14 * scale);
        assert!(d.k.hermitian_defect() < 1e-12 * scale);
        assert!(d.mass.hermitian_defect() < 1e-14);
        let ev = linalg::hermitian_eigenvalues(&d.mass.to_dense()).unwrap();
        assert!(ev[0] > 0.0);
    }

    #[test]
    fn constraint_matrix_has_full_rank() {
        let d = example_dop(3, 12, 0.0);
        let c = d.constraint_matrix().to_dense();
        let s = linalg::singular_values(&c).unwrap();
        assert!(s.iter().fold(f64::INFINITY, |m: f64, &v| m.min(v)) > 0.5);
    }

    #[test]
    fn potential_enters_only_through_its_mass_weighted_block() {
        // A(t) - A(0) = Σ_T √g|T| (1 + δ_ab)/12 · t Q_1(centroid)
        let p = FlowProblem::annulus_example();
        let mesh = problem_mesh(&p, &FemOptions { n_r: 3, n_phi: 12, ..Default::default() }).unwrap();
        let a0 = assemble(&mesh, &p, 0.0, &FemOptions::default()).unwrap();
        let a1 = assemble(&mesh, &p, 0.6, &FemOptions::default()).unwrap();
        let diff = a1.a.combine(1.0, &a0.a, -1.0);
        let (transforms, offsets) = node_transforms(&mesh, &p, &FemOptions::default()).unwrap();
        let mut trip = Vec::new();
        for tri in 0..mesh.triangles().len() {
            let s = Sample { x: mesh.centroid(tri), triangle: Some(tri) };
            let q = p.potential(s, 0.6).unwrap();
            let weight = p.operator.metric.sqrt_g(s).unwrap() * mesh.triangle_area(tri);
            let nodes = mesh.triangles()[tri];
            for a in 0..3 {
                for b in 0..3 {
                    let f = if a == b { 2.0 } else { 1.0 } / 12.0;
                    let blk = reduce_block(&linalg::scale_re(&q, weight * f), transforms[nodes[a]].as_ref(), transforms[nodes[b]].as_ref());
                    push_block(&mut trip, offsets[nodes[a]], offsets[nodes[b]], &blk);
                }
            }
        }
        let expected = CsrMatrix::from_triplets(diff.nrows, diff.ncols, trip);
        assert!(linalg::max_abs_diff(&diff.to_dense(), &expected.to_dense()) < 1e-12);
    }

    #[test]
    fn discrete_green_identity() {
        use rand::{Rng, SeedableRng};
        let d = example_dop(4, 16, 0.4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = d.dim();
        let mut rand_vec = || -> Vec<c64> { (0..n).map(|_| linalg::cx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect() };
        let (x, y) = (rand_vec(), rand_vec());
        let dot = |a: &[c64], b: &[c64]| a.iter().zip(b).map(|(p, q)| p.conj() * q).sum::<c64>();
        let mut ay = vec![c64::ZERO; n];
        let mut ax = vec![c64::ZERO; n];
        d.a.matvec(&y, &mut ay);
        d.a.matvec(&x, &mut ax);
        let defect = (dot(&x, &ay) - dot(&y, &ax).conj()).norm();
        let norm = dot(&x, &x).re.sqrt() * dot(&y, &y).re.sqrt();
        assert!(defect <= 1e-12 * norm);
    }

    #[test]
    fn identity_frame_operator_is_hermitian_on_a_plain_annulus() {
        let domain = crate::domain::make_annulus(1.0, 2.0).unwrap();
        let op = OperatorSpec { n: 1, metric: MetricSpec::Euclidean, phi: PhiField::Identity, q_base: PotentialField::Zero };
        let bc = crate::boundary::BoundaryCondition::scalar(&[1.0, 1.0], 1e-8).unwrap();
        let p = FlowProblem::new(domain, op, bc, PotentialPath::GaugeLinear { gauge: GaugeField::angular(0) }).unwrap();
        let mesh = problem_mesh(&p, &FemOptions { n_r: 3, n_phi: 12, ..Default::default() }).unwrap();
        let d = assemble(&mesh, &p, 0.0, &FemOptions::default()).unwrap();
        assert!(d.a.hermitian_defect() < 1e-13);
    }
}
