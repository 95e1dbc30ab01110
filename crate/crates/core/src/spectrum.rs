//! Spectra at a single parameter value.

use serde::Serialize;

use crate::error::Result;

/// Anything that produces certified windowed spectra along a path.
pub trait SliceSolver: Sync {
    fn slice(&self, t: f64, window: f64) -> Result<SpectrumSlice>;
    /// Accuracy of reported eigenvalues.
    fn eig_tol(&self) -> f64;
    /// Endpoint values at or below this magnitude count as zero.
    fn zero_tol(&self) -> f64;
    /// True when provenance labels follow eigenvalue branches continuously
    /// in `t`, so endpoint slices alone determine the isospectral shift.
    fn intrinsic_labels(&self) -> bool;
    fn name(&self) -> &'static str;
}

/// Where an eigenvalue came from; stable labels make isospectral shifts
/// readable without re-tracking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    /// Angular mode `k`, scalar block, Prüfer index.
    Mode { k: i64, block: usize, index: i64 },
    /// Closed-form annulus spectrum: `branch = 0` is `λ = t - k`, `±l` the
    /// arcs `±√((k-t)² + (πl)²)`.
    Analytic { k: i64, branch: i64 },
    /// Index in the finite element Ritz list.
    Fem { index: usize },
    /// Tracked band identifier.
    Band { id: usize },
}

impl Provenance {
    pub fn mode_k(&self) -> Option<i64> {
        match self {
            Provenance::Mode { k, .. } | Provenance::Analytic { k, .. } => Some(*k),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub value: f64,
    pub provenance: Provenance,
    pub on_window_edge: bool,
}

/// Eigenvalues in the closed window `[-window, window]`, sorted ascending,
/// one entry per multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumSlice {
    pub t: f64,
    pub window: f64,
    pub eigenvalues: Vec<Eigenvalue>,
    pub certified: bool,
}

pub const FEM_MODE_SENTINEL: i64 = -999;

impl SpectrumSlice {
    /// Sorts, drops values outside the window (beyond `eig_tol`), snaps
    /// `|λ| < eig_tol` to 0 and flags window-edge values.
    pub fn new(t: f64, window: f64, values: Vec<(f64, Provenance)>, eig_tol: f64, certified: bool) -> Self {
        let mut eigenvalues: Vec<Eigenvalue> = values
            .into_iter()
            .filter(|(v, _)| v.abs() <= window + eig_tol)
            .map(|(v, provenance)| Eigenvalue {
                value: if v.abs() < eig_tol { 0.0 } else { v },
                provenance,
                on_window_edge: (v.abs() - window).abs() <= eig_tol,
            })
            .collect();
        eigenvalues.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.provenance.cmp(&b.provenance)));
        Self { t, window, eigenvalues, certified }
    }

    pub fn values(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.value).collect()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Distinct values (within `tol`) with multiplicities.
    pub fn grouped(&self, tol: f64) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for e in &self.eigenvalues {
            match out.last_mut() {
                Some((v, m)) if (e.value - *v).abs() <= tol => *m += 1,
                _ => out.push((e.value, 1)),
            }
        }
        out
    }

    /// Rows `(t, λ, multiplicity, mode_k)`; coincident values from the same
    /// mode are merged. FEM rows carry mode `-999`.
    pub fn csv_rows(&self, tol: f64) -> Vec<(f64, f64, usize, i64)> {
        let mut rows: Vec<(f64, f64, usize, i64)> = Vec::new();
        for e in &self.eigenvalues {
            let k = e.provenance.mode_k().unwrap_or(FEM_MODE_SENTINEL);
            match rows.iter_mut().rev().take_while(|r| (e.value - r.1).abs() <= tol).find(|r| r.3 == k) {
                Some(r) => r.2 += 1,
                None => rows.push((self.t, e.value, 1, k)),
            }
        }
        rows
    }

    pub fn relabeled(&self, labels: &[Provenance]) -> SpectrumSlice {
        let mut out = self.clone();
        for (e, &p) in out.eigenvalues.iter_mut().zip(labels) {
            e.provenance = p;
        }
        out
    }
}

pub fn write_csv(slices: &[SpectrumSlice], tol: f64) -> String {
    let mut s = String::from("t,lambda,multiplicity,mode_k\n");
    for slice in slices {
        for (t, v, m, k) in slice.csv_rows(tol) {
            s.push_str(&format!("{t},{v},{m},{k}\n"));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_sorts_snaps_and_flags() {
        let s = SpectrumSlice::new(
            0.0,
            1.0,
            vec![
                (0.5, Provenance::Fem { index: 0 }),
                (1e-12, Provenance::Fem { index: 1 }),
                (-1.0, Provenance::Fem { index: 2 }),
                (1.5, Provenance::Fem { index: 3 }),
            ],
            1e-8,
            true,
        );
        assert_eq!(s.values(), vec![-1.0, 0.0, 0.5]);
        assert!(s.eigenvalues[0].on_window_edge && !s.eigenvalues[1].on_window_edge);
    }

    #[test]
    fn csv_merges_same_mode_only() {
        let s = SpectrumSlice::new(
            0.25,
            5.0,
            vec![
                (1.0, Provenance::Mode { k: 0, block: 0, index: 0 }),
                (1.0, Provenance::Mode { k: 0, block: 1, index: 0 }),
                (1.0, Provenance::Mode { k: 2, block: 0, index: 1 }),
            ],
            1e-8,
            true,
        );
        assert_eq!(s.csv_rows(1e-8), vec![(0.25, 1.0, 2, 0), (0.25, 1.0, 1, 2)]);
        assert_eq!(s.grouped(1e-8), vec![(1.0, 3)]);
    }
}
