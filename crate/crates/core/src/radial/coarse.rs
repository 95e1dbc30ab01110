//! Coarse 1D Galerkin model of one mode block, used to certify that the
//! shooting scan found every eigenvalue in the window.
//!
//! The squared form `‖D_k u‖²` is discretized with P1 elements; by min-max
//! its eigenvalues bound `λ²` from above, and Sylvester inertia of
//! `K - σM` counts them without solving.

use crate::linalg::{c64, CMat, I};

use super::ModeBlock;

const HALF_BAND: usize = 3;

/// Hermitian band matrix, lower band stored row-wise: `lower[i][d] = A[i, i-d]`.
struct Band {
    lower: Vec<[c64; HALF_BAND + 1]>,
}

impl Band {
    fn zeros(n: usize) -> Self {
        Self { lower: vec![[c64::ZERO; HALF_BAND + 1]; n] }
    }

    fn add(&mut self, i: usize, j: usize, v: c64) {
        if i >= j {
            self.lower[i][i - j] += v;
        }
    }

    /// Number of negative pivots of `LDL*` (no pivoting needed for inertia
    /// of a Hermitian matrix unless a pivot vanishes exactly).
    fn negative_pivots(&self) -> usize {
        let n = self.lower.len();
        let mut l = self.lower.clone();
        let mut d = vec![0.0f64; n];
        let mut neg = 0;
        for i in 0..n {
            for off in (1..=HALF_BAND.min(i)).rev() {
                let j = i - off;
                // l[i][off] = (A_ij - Σ_k L_ik conj(L_jk) d_k) / d_j over k < j in band
                let mut acc = l[i][off];
                for k in j.saturating_sub(HALF_BAND)..j {
                    if i - k <= HALF_BAND {
                        acc -= l[i][i - k] * l[j][j - k].conj() * d[k];
                    }
                }
                l[i][off] = acc / d[j];
            }
            let mut di = l[i][0].re;
            for k in i.saturating_sub(HALF_BAND)..i {
                di -= l[i][i - k].norm_sqr() * d[k];
            }
            if di == 0.0 {
                di = -f64::MIN_POSITIVE;
            }
            d[i] = di;
            if di < 0.0 {
                neg += 1;
            }
        }
        neg
    }
}

/// Assembled squared-form stiffness `K` and mass `M` for one block.
pub(crate) struct CoarseModel {
    k: Band,
    m: Band,
    #[cfg_attr(not(test), allow(dead_code))]
    dense: Option<(CMat, CMat)>,
}

const GAUSS: [(f64, f64); 3] = [
    (0.5 - 0.387_298_334_620_741_7, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.5 + 0.387_298_334_620_741_7, 5.0 / 18.0),
];

/// `(dof, coefficient)` for both spinor components of a node.
fn node_dofs(node: usize, last: usize, c_in: c64, c_out: c64) -> [(usize, c64); 2] {
    if node == 0 {
        [(0, c_in), (0, c64::ONE)]
    } else if node == last {
        let d = 2 * last - 1;
        [(d, c_out), (d, c64::ONE)]
    } else {
        [(2 * node - 1, c64::ONE), (2 * node, c64::ONE)]
    }
}

impl CoarseModel {
    pub(crate) fn assemble(block: &ModeBlock, points: usize, keep_dense: bool) -> Self {
        let points = points.max(3);
        let last = points - 1;
        let ndof = 2 * points - 2;
        let (c_in, c_out) = block.endpoint_ratios();
        let mut k = Band::zeros(ndof);
        let mut m = Band::zeros(ndof);
        let mut dense = keep_dense.then(|| (CMat::zeros(ndof, ndof), CMat::zeros(ndof, ndof)));
        let rr = block.rho_r();
        let h = (block.r_out - block.r_in) / last as f64;
        for e in 0..last {
            let r0 = block.r_in + h * e as f64;
            let dofs = [node_dofs(e, last, c_in, c_out), node_dofs(e + 1, last, c_in, c_out)];
            for &(xi, wq) in &GAUSS {
                let r = r0 + xi * h;
                let w = wq * h * block.sqrt_g(r);
                let v = block.potential(r);
                let phi = [1.0 - xi, xi];
                let dphi = [-1.0 / h, 1.0 / h];
                // D(φ_a e_c) = -i ρ_r e_c φ_a' + V e_c φ_a
                let apply = |a: usize, c: usize| -> [c64; 2] {
                    std::array::from_fn(|row| -I * rr[row][c] * dphi[a] + v[row][c] * phi[a])
                };
                let local: Vec<(usize, c64, [c64; 2], f64, usize)> = (0..2)
                    .flat_map(|a| (0..2).map(move |c| (a, c)))
                    .map(|(a, c)| (dofs[a][c].0, dofs[a][c].1, apply(a, c), phi[a], c))
                    .collect();
                for &(di, ci, ref dv_i, pi, comp_i) in &local {
                    for &(dj, cj, ref dv_j, pj, comp_j) in &local {
                        let kij = (dv_i[0].conj() * dv_j[0] + dv_i[1].conj() * dv_j[1]) * w;
                        let kij = ci.conj() * cj * kij;
                        let mij = if comp_i == comp_j { ci.conj() * cj * (w * pi * pj) } else { c64::ZERO };
                        k.add(di, dj, kij);
                        m.add(di, dj, mij);
                        if let Some((kd, md)) = dense.as_mut() {
                            kd[(di, dj)] += kij;
                            md[(di, dj)] += mij;
                        }
                    }
                }
            }
        }
        Self { k, m, dense }
    }

    /// `#{ν_h < σ}`.
    pub(crate) fn count_below(&self, sigma: f64) -> usize {
        let mut shifted = Band::zeros(self.k.lower.len());
        for (i, (kr, mr)) in self.k.lower.iter().zip(&self.m.lower).enumerate() {
            for d in 0..=HALF_BAND {
                shifted.lower[i][d] = kr[d] - mr[d] * sigma;
            }
        }
        shifted.negative_pivots()
    }

    #[cfg(test)]
    pub(crate) fn dense(&self) -> &(CMat, CMat) {
        self.dense.as_ref().expect("assembled with keep_dense")
    }
}

/// First-order Galerkin matrix `G_ij = ∫ ψ_i* (D ψ_j) √g dr` on the
/// constrained P1 space.
#[cfg(test)]
pub(crate) fn first_order_galerkin(block: &ModeBlock, points: usize, include_r: bool) -> CMat {
    let last = points - 1;
    let ndof = 2 * points - 2;
    let (c_in, c_out) = block.endpoint_ratios();
    let mut g = CMat::zeros(ndof, ndof);
    let rr = block.rho_r();
    let h = (block.r_out - block.r_in) / last as f64;
    for e in 0..last {
        let r0 = block.r_in + h * e as f64;
        let dofs = [node_dofs(e, last, c_in, c_out), node_dofs(e + 1, last, c_in, c_out)];
        for &(xi, wq) in &GAUSS {
            let r = r0 + xi * h;
            let w = wq * h * block.sqrt_g(r);
            let mut v = block.potential(r);
            if !include_r {
                let rt = block.r_matrix(r);
                for a in 0..2 {
                    for b in 0..2 {
                        v[a][b] -= I * rt[a][b];
                    }
                }
            }
            let phi = [1.0 - xi, xi];
            let dphi = [-1.0 / h, 1.0 / h];
            for a in 0..2 {
                for c in 0..2 {
                    let (di, ci) = dofs[a][c];
                    for b in 0..2 {
                        for d in 0..2 {
                            let (dj, cj) = dofs[b][d];
                            // ⟨φ_a e_c, D φ_b e_d⟩
                            let dpsi = -I * rr[c][d] * dphi[b] + v[c][d] * phi[b];
                            g[(di, dj)] += ci.conj() * cj * dpsi * (w * phi[a]);
                        }
                    }
                }
            }
        }
    }
    g
}
