//! Small dense complex matrix helpers on top of faer, plus a compressed
//! sparse row matrix used by the assembly and Krylov code.

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};

pub use faer::c64;

use crate::error::{Error, Result};

pub type CMat = Mat<c64>;

pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn cx(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    Mat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn real_diag(values: &[f64]) -> CMat {
    let n = values.len();
    Mat::from_fn(n, n, |i, j| if i == j { cx(values[i], 0.0) } else { c64::ZERO })
}

/// `[[0, I], [I, 0]]` in 2N dimensions.
pub fn sigma1(n: usize) -> CMat {
    Mat::from_fn(2 * n, 2 * n, |i, j| {
        if (i < n && j == i + n) || (i >= n && j + n == i) {
            c64::ONE
        } else {
            c64::ZERO
        }
    })
}

/// `[[0, -iI], [iI, 0]]` in 2N dimensions.
pub fn sigma2(n: usize) -> CMat {
    Mat::from_fn(2 * n, 2 * n, |i, j| {
        if i < n && j == i + n {
            -I
        } else if i >= n && j + n == i {
            I
        } else {
            c64::ZERO
        }
    })
}

/// `[[I, 0], [0, -I]]` in 2N dimensions.
pub fn sigma3(n: usize) -> CMat {
    Mat::from_fn(2 * n, 2 * n, |i, j| {
        if i != j {
            c64::ZERO
        } else if i < n {
            c64::ONE
        } else {
            -c64::ONE
        }
    })
}

pub fn scale(a: &CMat, s: c64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn scale_re(a: &CMat, s: f64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn add(a: &CMat, b: &CMat) -> CMat {
    a + b
}

pub fn sub(a: &CMat, b: &CMat) -> CMat {
    a - b
}

pub fn mul(a: &CMat, b: &CMat) -> CMat {
    a * b
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b))
}

/// Largest entry of `A - A*`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

pub fn hermitian_part(a: &CMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    if a.nrows() == 0 {
        return Ok((Vec::new(), zeros(0, 0)));
    }
    let h = hermitian_part(a);
    let e = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigensolveFailure(format!("{e:?}")))?;
    let s = e.S();
    let values = (0..h.nrows()).map(|i| s[i].re).collect();
    Ok((values, e.U().to_owned()))
}

pub fn hermitian_eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(a)?.0)
}

pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    a.singular_values()
        .map_err(|e| Error::EigensolveFailure(format!("{e:?}")))
}

pub fn min_singular_value(a: &CMat) -> Result<f64> {
    Ok(singular_values(a)?.into_iter().fold(f64::INFINITY, f64::min))
}

pub fn inverse(a: &CMat, inv_tol: f64) -> Result<CMat> {
    let sigma_min = min_singular_value(a)?;
    if sigma_min < inv_tol {
        return Err(Error::NotInvertible { sigma_min });
    }
    Ok(a.partial_piv_lu().inverse())
}

/// Orthogonal projector onto the column span of `v` (columns assumed independent).
pub fn projector(v: &CMat) -> Result<CMat> {
    let gram = v.adjoint() * v;
    let gi = inverse(&gram, 1e-14)?;
    Ok(v * &gi * v.adjoint())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Block matrix `[[a, b], [c, d]]`.
pub fn blocks(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    let (r1, c1) = (a.nrows(), a.ncols());
    Mat::from_fn(r1 + c.nrows(), c1 + b.ncols(), |i, j| match (i < r1, j < c1) {
        (true, true) => a[(i, j)],
        (true, false) => b[(i, j - c1)],
        (false, true) => c[(i - r1, j)],
        (false, false) => d[(i - r1, j - c1)],
    })
}

/// Block diagonal `diag(a, b)`.
pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    blocks(a, &zeros(a.nrows(), b.ncols()), &zeros(b.nrows(), a.ncols()), b)
}

/// Direct sum of two spinor-space matrices of sizes `2n_a` and `2n_b`, with
/// the `u⁺` components of both summands first.
pub fn spinor_direct_sum(a: &CMat, n_a: usize, b: &CMat, n_b: usize) -> CMat {
    let n = n_a + n_b;
    let place_a = |i: usize| if i < n_a { i } else { n + i - n_a };
    let place_b = |i: usize| if i < n_b { n_a + i } else { n + n_a + i - n_b };
    let mut out = zeros(2 * n, 2 * n);
    for i in 0..2 * n_a {
        for j in 0..2 * n_a {
            out[(place_a(i), place_a(j))] = a[(i, j)];
        }
    }
    for i in 0..2 * n_b {
        for j in 0..2 * n_b {
            out[(place_b(i), place_b(j))] = b[(i, j)];
        }
    }
    out
}

pub fn from_rows(rows: &[&[c64]]) -> CMat {
    let n = rows.len();
    let m = if n == 0 { 0 } else { rows[0].len() };
    Mat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMat {
    let n = rows.len();
    let m = if n == 0 { 0 } else { rows[0].len() };
    Mat::from_fn(n, m, |i, j| cx(rows[i][j], 0.0))
}

/// Compressed sparse row complex matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<c64>,
}

impl CsrMatrix {
    /// Builds from triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, c64)>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<c64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(p) => self.values[self.row_ptr[i] + p],
            Err(_) => c64::ZERO,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, c64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.col_idx[p], self.values[p]))
        })
    }

    pub fn matvec(&self, x: &[c64], y: &mut [c64]) {
        for i in 0..self.nrows {
            let mut acc = c64::ZERO;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            y[i] = acc;
        }
    }

    /// `self * x` for a dense block of columns.
    pub fn mul_dense(&self, x: &CMat) -> CMat {
        let mut out = zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.nrows {
                let mut acc = c64::ZERO;
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.values[p] * x[(self.col_idx[p], c)];
                }
                out[(i, c)] = acc;
            }
        }
        out
    }

    pub fn to_dense(&self) -> CMat {
        let mut d = zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] += v;
        }
        d
    }

    /// Linear combination `a*self + b*other` (same shape).
    pub fn combine(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        let t: Vec<_> = self
            .triplets()
            .map(|(i, j, v)| (i, j, v * a))
            .chain(other.triplets().map(|(i, j, v)| (i, j, v * b)))
            .collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_faer(&self) -> Result<faer::sparse::SparseColMat<usize, c64>> {
        let t: Vec<_> = self
            .triplets()
            .map(|(i, j, v)| faer::sparse::Triplet::new(i, j, v))
            .collect();
        faer::sparse::SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| Error::EigensolveFailure(format!("sparse build: {e:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_blocks_anticommute_and_square_to_one() {
        for n in 1..=3 {
            let (s1, s2, s3) = (sigma1(n), sigma2(n), sigma3(n));
            let id = identity(2 * n);
            assert!(max_abs_diff(&(&s1 * &s1), &id) < 1e-15);
            assert!(max_abs_diff(&(&s2 * &s2), &id) < 1e-15);
            assert!(max_abs(&(&(&s1 * &s2) + &(&s2 * &s1))) < 1e-15);
            // σ1σ2 = iσ3
            assert!(max_abs_diff(&(&s1 * &s2), &scale(&s3, I)) < 1e-15);
        }
    }

    #[test]
    fn csr_sums_duplicates_and_multiplies() {
        let m = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, cx(2.0, 0.0)), (1, 1, cx(3.0, 0.0)), (0, 0, cx(2.0, 0.0)), (0, 1, -I), (1, 0, I)],
        );
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.get(0, 0), cx(4.0, 0.0));
        let mut y = vec![c64::ZERO; 2];
        m.matvec(&[c64::ONE, c64::ONE], &mut y);
        assert_eq!(y, vec![cx(4.0, -1.0), cx(3.0, 1.0)]);
        assert!(m.hermitian_defect() < 1e-15);
    }

    #[test]
    fn hermitian_eigen_sorted() {
        let a = from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let (v, _) = hermitian_eigen(&a).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] - 3.0).abs() < 1e-14);
    }
}
