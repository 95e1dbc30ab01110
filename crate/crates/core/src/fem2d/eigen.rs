//! Windowed eigenvalues of the constrained discretization.

use faer::linalg::solvers::SolveCore;
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Conj, Mat, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fem_labels, DiscreteOperator, FemOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, CsrMatrix};
use crate::spectrum::SpectrumSlice;

/// Low eigenpairs of the squared form: `K v = ν M v`, `V* M V = 1`.
#[derive(Clone, Debug)]
pub struct FemEigenpairs {
    pub nu: Vec<f64>,
    pub basis: CMat,
}

/// Squared-form cutoff covering the window with margin.
pub fn squared_cutoff(window: f64) -> f64 {
    (1.25 * window + 0.25).powi(2)
}

fn low_pencil_dense(dop: &DiscreteOperator, cut: f64) -> Result<FemEigenpairs> {
    let k = dop.k.to_dense();
    let m = dop.mass.to_dense();
    let llt = m.llt(Side::Lower).map_err(|e| Error::EigensolveFailure(format!("mass not positive definite: {e:?}")))?;
    let l = llt.L().to_owned();
    let mut c = k;
    solve_lower_triangular_in_place(l.as_ref(), c.as_mut(), Par::Seq);
    let mut c = c.adjoint().to_owned();
    solve_lower_triangular_in_place(l.as_ref(), c.as_mut(), Par::Seq);
    let (nu, z) = linalg::hermitian_eigen(&linalg::hermitian_part(&c))?;
    let keep = nu.iter().take_while(|&&v| v <= cut).count();
    let mut basis = z.subcols(0, keep).to_owned();
    solve_upper_triangular_in_place(l.adjoint(), basis.as_mut(), Par::Seq);
    Ok(FemEigenpairs { nu: nu[..keep].to_vec(), basis })
}

fn dot(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[c64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn apply(a: &CsrMatrix, x: &[c64]) -> Vec<c64> {
    let mut y = vec![c64::ZERO; a.nrows];
    a.matvec(x, &mut y);
    y
}

/// Block Krylov iteration for `(K + M)⁻¹ M`, whose dominant eigenvalues
/// `1/(1 + ν)` belong to the smallest `ν`.
fn low_pencil_krylov(dop: &DiscreteOperator, cut: f64, opts: &FemOptions) -> Result<FemEigenpairs> {
    let n = dop.dim();
    let shifted = dop.k.combine(1.0, &dop.mass, 1.0).to_faer()?;
    let llt = shifted
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::EigensolveFailure(format!("shifted form not positive definite: {e:?}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let bs = opts.block_size.max(1).min(n);
    let mut basis: Vec<Vec<c64>> = Vec::new();
    let mut mbasis: Vec<Vec<c64>> = Vec::new();
    let mut kproj: Vec<Vec<c64>> = Vec::new();
    let mut block: Vec<Vec<c64>> =
        (0..bs).map(|_| (0..n).map(|_| linalg::cx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()).collect();
    let check_limit = 1.2 * cut;
    loop {
        let mut added = 0;
        for mut w in block.drain(..) {
            let start = dot(&w, &apply(&dop.mass, &w)).re.sqrt();
            for _ in 0..2 {
                for (v, mv) in basis.iter().zip(&mbasis) {
                    let h = dot(mv, &w);
                    w.iter_mut().zip(v).for_each(|(x, y)| *x -= h * y);
                }
            }
            let mw = apply(&dop.mass, &w);
            let len = dot(&w, &mw).re.max(0.0).sqrt();
            if len <= 1e-10 * start {
                continue;
            }
            let v: Vec<c64> = w.iter().map(|x| x / len).collect();
            let mv: Vec<c64> = mw.iter().map(|x| x / len).collect();
            let kv = apply(&dop.k, &v);
            let col: Vec<c64> = basis.iter().map(|u| dot(u, &kv)).chain(std::iter::once(dot(&v, &kv))).collect();
            for (row, &c) in kproj.iter_mut().zip(&col) {
                row.push(c.conj());
            }
            kproj.push(col);
            basis.push(v);
            mbasis.push(mv);
            added += 1;
        }
        let p = basis.len();
        let h = Mat::from_fn(p, p, |i, j| if i <= j { kproj[j][i] } else { kproj[i][j].conj() });
        let (theta, z) = linalg::hermitian_eigen(&linalg::hermitian_part(&h))?;
        let ritz = |i: usize| -> Vec<c64> {
            let mut x = vec![c64::ZERO; n];
            for (j, v) in basis.iter().enumerate() {
                let c = z[(j, i)];
                x.iter_mut().zip(v).for_each(|(a, b)| *a += c * b);
            }
            x
        };
        let watched = theta.iter().take_while(|&&v| v <= check_limit).count() + 1;
        let converged = p == n
            || (watched <= p
                && (0..watched).all(|i| {
                    let x = ritz(i);
                    let (kx, mx) = (apply(&dop.k, &x), apply(&dop.mass, &x));
                    let r: Vec<c64> = kx.iter().zip(&mx).map(|(a, b)| a - theta[i] * b).collect();
                    norm(&r) <= opts.krylov_tol * (norm(&kx) + theta[i].abs().max(1.0) * norm(&mx))
                }));
        if converged {
            let keep = theta.iter().take_while(|&&v| v <= cut).count();
            let basis_mat = Mat::from_fn(n, keep, |_, _| c64::ZERO);
            let mut out = basis_mat;
            for i in 0..keep {
                for (r, v) in ritz(i).into_iter().enumerate() {
                    out[(r, i)] = v;
                }
            }
            log::debug!("krylov converged with basis {p}, {keep} pairs below cut");
            return Ok(FemEigenpairs { nu: theta[..keep].to_vec(), basis: out });
        }
        if added == 0 || p + bs > opts.max_basis {
            return Err(Error::EigensolveFailure(format!("block Krylov did not converge with basis {p}")));
        }
        let last = &mbasis[p - added..];
        let mut rhs = Mat::from_fn(n, last.len(), |i, j| last[j][i]);
        llt.solve_in_place_with_conj(Conj::No, rhs.as_mut());
        block = (0..rhs.ncols()).map(|j| (0..n).map(|i| rhs[(i, j)]).collect()).collect();
    }
}

/// Low squared-form eigenpairs below `cut`.
pub fn low_pencil(dop: &DiscreteOperator, cut: f64, opts: &FemOptions) -> Result<FemEigenpairs> {
    if dop.dim() <= opts.dense_limit {
        low_pencil_dense(dop, cut)
    } else {
        low_pencil_krylov(dop, cut, opts)
    }
}

/// Eigenvalues of the discretized operator in `[-window, window]`.
pub fn fem_spectrum(dop: &DiscreteOperator, window: f64, opts: &FemOptions) -> Result<SpectrumSlice> {
    if window <= 0.0 {
        return Ok(SpectrumSlice::new(dop.t, window.max(0.0), Vec::new(), opts.eig_tol, true));
    }
    let pairs = low_pencil(dop, squared_cutoff(window), opts)?;
    let p = pairs.nu.len();
    if p == 0 {
        return Ok(SpectrumSlice::new(dop.t, window, Vec::new(), opts.eig_tol, true));
    }
    let av = dop.a.mul_dense(&pairs.basis);
    let h = linalg::mul(&linalg::adjoint(&pairs.basis), &av);
    let (lambda, s) = linalg::hermitian_eigen(&linalg::hermitian_part(&h))?;
    let mut kept = Vec::new();
    for (i, &l) in lambda.iter().enumerate() {
        let quad: f64 = (0..p).map(|j| s[(j, i)].norm_sqr() * pairs.nu[j]).sum();
        let residual = (quad - l * l).max(0.0).sqrt();
        if residual <= opts.res_tol * (1.0 + l.abs()) {
            kept.push(l);
        } else if l.abs() <= window {
            log::debug!("t = {}: rejected λ = {l:.5} with residual {residual:.3}", dop.t);
        }
    }
    let labels = fem_labels(kept.len());
    Ok(SpectrumSlice::new(dop.t, window, kept.into_iter().zip(labels).collect(), opts.eig_tol, true))
}

#[cfg(test)]
mod tests {
    use super::super::{assemble, problem_mesh};
    use super::*;
    use crate::problem::FlowProblem;

    #[test]
    fn dense_and_krylov_agree() {
        let p = FlowProblem::annulus_example();
        let opts = FemOptions { n_r: 6, n_phi: 36, ..Default::default() };
        let mesh = problem_mesh(&p, &opts).unwrap();
        let dop = assemble(&mesh, &p, 0.3, &opts).unwrap();
        assert!(dop.dim() > 300);
        let dense = low_pencil_dense(&dop, 12.0).unwrap();
        let krylov = low_pencil_krylov(&dop, 12.0, &opts).unwrap();
        assert_eq!(dense.nu.len(), krylov.nu.len());
        for (a, b) in dense.nu.iter().zip(&krylov.nu) {
            assert!((a - b).abs() < 1e-7 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn empty_window() {
        let p = FlowProblem::annulus_example();
        let opts = FemOptions { n_r: 2, n_phi: 12, ..Default::default() };
        let dop = assemble(&problem_mesh(&p, &opts).unwrap(), &p, 0.0, &opts).unwrap();
        assert!(fem_spectrum(&dop, 0.0, &opts).unwrap().is_empty());
    }
}
