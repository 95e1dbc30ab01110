//! Sorted-order band tracking with adaptive bisection of the `t` grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{SliceSolver, SpectrumSlice};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackOptions {
    /// Bisection levels allowed per initial interval.
    pub max_depth: u32,
    /// An offset is ambiguous when its cost exceeds this fraction of the
    /// runner-up cost.
    pub ambiguity_ratio: f64,
    /// Largest matched displacement accepted without refinement.
    pub max_move: f64,
    /// Width of the window-edge zone, as a fraction of the window, through
    /// which eigenvalues may enter or leave between two samples.
    pub edge_fraction: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self { max_depth: 12, ambiguity_ratio: 0.25, max_move: 0.5, edge_fraction: 0.1 }
    }
}

/// Sorted matching `a[i] ↔ b[i + offset]` between consecutive slices.
/// A positive offset means eigenvalues entered through the bottom edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matching {
    pub offset: i64,
    pub cost: f64,
    pub ambiguous: bool,
}

impl Matching {
    fn needs_refinement(&self, opts: &TrackOptions) -> bool {
        self.ambiguous || self.cost > opts.max_move
    }

    fn pairs(&self, na: usize, nb: usize) -> std::ops::Range<usize> {
        overlap(na, nb, self.offset)
    }
}

fn overlap(na: usize, nb: usize, d: i64) -> std::ops::Range<usize> {
    let lo = (-d).max(0) as usize;
    let hi = (nb as i64 - d).clamp(0, na as i64) as usize;
    lo..hi.max(lo)
}

fn offset_cost(a: &[f64], b: &[f64], d: i64) -> f64 {
    overlap(a.len(), b.len(), d)
        .map(|i| (a[i] - b[(i as i64 + d) as usize]).abs())
        .fold(0.0, f64::max)
}

/// Unmatched values must sit in the edge zone on their own side.
fn offset_feasible(a: &[f64], b: &[f64], d: i64, zone: f64, window: f64) -> bool {
    let range = overlap(a.len(), b.len(), d);
    let near_bottom = |v: f64| v <= -window + zone;
    let near_top = |v: f64| v >= window - zone;
    let a_ok = a.iter().enumerate().all(|(i, &v)| {
        if range.contains(&i) {
            true
        } else if i < range.start {
            near_bottom(v)
        } else {
            near_top(v)
        }
    });
    let b_ok = b.iter().enumerate().all(|(j, &v)| {
        let i = j as i64 - d;
        if i >= range.start as i64 && i < range.end as i64 {
            true
        } else if i < range.start as i64 {
            near_bottom(v)
        } else {
            near_top(v)
        }
    });
    a_ok && b_ok
}

/// Best feasible sorted matching, if any.
pub fn match_slices(a: &[f64], b: &[f64], window: f64, opts: &TrackOptions) -> Option<Matching> {
    let mut candidates: Vec<(i64, f64)> = Vec::new();
    for d in -(a.len() as i64)..=(b.len() as i64) {
        let cost = offset_cost(a, b, d);
        let zone = (2.0 * cost).max(opts.edge_fraction * window);
        if offset_feasible(a, b, d, zone, window) {
            candidates.push((d, cost));
        }
    }
    candidates.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.abs().cmp(&y.0.abs())));
    let &(offset, cost) = candidates.first()?;
    let ambiguous = candidates.get(1).is_some_and(|&(_, second)| cost > opts.ambiguity_ratio * second);
    Some(Matching { offset, cost, ambiguous })
}

/// One recorded passage of a band through the counting level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub t: f64,
    pub band: usize,
    /// `+1` upward, `-1` downward.
    pub direction: i8,
}

/// Slices on the refined grid with the sorted matchings between them and a
/// band id for every eigenvalue.
#[derive(Clone, Debug)]
pub struct BandFamily {
    pub window: f64,
    pub slices: Vec<SpectrumSlice>,
    pub matchings: Vec<Matching>,
    pub band_ids: Vec<Vec<usize>>,
    pub refinements: usize,
}

impl BandFamily {
    pub fn t_grid(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.t).collect()
    }

    pub fn num_bands(&self) -> usize {
        self.band_ids.iter().flatten().map(|&id| id + 1).max().unwrap_or(0)
    }

    /// Samples `(t, λ)` of one band.
    pub fn band(&self, id: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (slice, ids) in self.slices.iter().zip(&self.band_ids) {
            if let Some(pos) = ids.iter().position(|&b| b == id) {
                out.push((slice.t, slice.eigenvalues[pos].value));
            }
        }
        out
    }

    pub fn check_level(&self, level: f64, edge_fraction: f64) -> Result<()> {
        if level.abs() >= self.window * (1.0 - edge_fraction) {
            return Err(Error::InvalidInput(format!("level {level} lies in the window-edge zone")));
        }
        Ok(())
    }

    /// Net upward passages through `level`: the change in the number of
    /// eigenvalues below the level, corrected by the flux through the
    /// bottom edge of the window.
    pub fn net_flow(&self, level: f64) -> i64 {
        let below = |s: &SpectrumSlice| s.eigenvalues.iter().filter(|e| e.value < level).count() as i64;
        let (Some(first), Some(last)) = (self.slices.first(), self.slices.last()) else { return 0 };
        let flux: i64 = self.matchings.iter().map(|m| m.offset).sum();
        below(first) - below(last) + flux
    }

    /// Matched pairs straddling `level`, with linearly interpolated times.
    pub fn crossings(&self, level: f64) -> Vec<CrossingEvent> {
        let mut out = Vec::new();
        for (n, m) in self.matchings.iter().enumerate() {
            let (a, b) = (&self.slices[n], &self.slices[n + 1]);
            for i in m.pairs(a.len(), b.len()) {
                let x = a.eigenvalues[i].value;
                let y = b.eigenvalues[(i as i64 + m.offset) as usize].value;
                let direction = match (x < level, y < level) {
                    (true, false) => 1,
                    (false, true) => -1,
                    _ => continue,
                };
                let f = (level - x) / (y - x);
                out.push(CrossingEvent { t: a.t + f * (b.t - a.t), band: self.band_ids[n][i], direction });
            }
        }
        out
    }

    /// Endpoint slices relabeled with band ids.
    pub fn labeled_endpoints(&self) -> (SpectrumSlice, SpectrumSlice) {
        let relabel = |k: usize| {
            let labels: Vec<_> = self.band_ids[k].iter().map(|&id| crate::spectrum::Provenance::Band { id }).collect();
            self.slices[k].relabeled(&labels)
        };
        (relabel(0), relabel(self.slices.len() - 1))
    }
}

/// Builds the family from already computed slices without refining; fails
/// when two consecutive slices admit no feasible matching.
pub fn track_slices(slices: Vec<SpectrumSlice>, opts: &TrackOptions) -> Result<BandFamily> {
    let Some(window) = slices.first().map(|s| s.window) else {
        return Err(Error::InvalidInput("no slices to track".into()));
    };
    if slices.iter().any(|s| s.window != window) {
        return Err(Error::InvalidInput("slices must share the window".into()));
    }
    if slices.windows(2).any(|w| w[1].t <= w[0].t) {
        return Err(Error::InvalidInput("slice times must increase".into()));
    }
    if slices.iter().any(|s| !s.certified) {
        log::warn!("tracking uncertified slices");
    }
    let mut matchings = Vec::with_capacity(slices.len().saturating_sub(1));
    let mut band_ids: Vec<Vec<usize>> = vec![(0..slices[0].len()).collect()];
    let mut next_id = slices[0].len();
    for pair in slices.windows(2) {
        let (a, b) = (pair[0].values(), pair[1].values());
        let m = match_slices(&a, &b, window, opts).ok_or(Error::RefinementBudgetExhausted { t: pair[0].t })?;
        let prev = band_ids.last().unwrap();
        let ids: Vec<usize> = (0..b.len())
            .map(|j| {
                let i = j as i64 - m.offset;
                if i >= 0 && (i as usize) < a.len() {
                    prev[i as usize]
                } else {
                    next_id += 1;
                    next_id - 1
                }
            })
            .collect();
        band_ids.push(ids);
        matchings.push(m);
    }
    Ok(BandFamily { window, slices, matchings, band_ids, refinements: 0 })
}

struct Node {
    slice: SpectrumSlice,
    depth: u32,
}

/// Computes slices on `t_grid`, bisecting every interval whose matching is
/// ambiguous or moves too far, then tracks the result.
pub fn track_bands(solver: &dyn SliceSolver, t_grid: &[f64], window: f64, opts: &TrackOptions) -> Result<BandFamily> {
    if t_grid.len() < 2 {
        return Err(Error::InvalidInput("t grid needs at least two points".into()));
    }
    let slices: Vec<SpectrumSlice> = t_grid.par_iter().map(|&t| solver.slice(t, window)).collect::<Result<_>>()?;
    let mut nodes: Vec<Node> = slices.into_iter().map(|slice| Node { slice, depth: 0 }).collect();
    let mut refinements = 0;
    loop {
        let mut mids: Vec<(usize, f64, u32)> = Vec::new();
        for (i, pair) in nodes.windows(2).enumerate() {
            let m = match_slices(&pair[0].slice.values(), &pair[1].slice.values(), window, opts);
            if m.is_some_and(|m| !m.needs_refinement(opts)) {
                continue;
            }
            let depth = pair[0].depth.max(pair[1].depth);
            if depth >= opts.max_depth {
                return Err(Error::RefinementBudgetExhausted { t: pair[0].slice.t });
            }
            mids.push((i, 0.5 * (pair[0].slice.t + pair[1].slice.t), depth + 1));
        }
        if mids.is_empty() {
            break;
        }
        refinements += mids.len();
        log::debug!("refining {} intervals", mids.len());
        let new: Vec<SpectrumSlice> = mids.par_iter().map(|&(_, t, _)| solver.slice(t, window)).collect::<Result<_>>()?;
        let mut merged = Vec::with_capacity(nodes.len() + new.len());
        let mut pending = mids.into_iter().zip(new).peekable();
        for (i, node) in nodes.into_iter().enumerate() {
            merged.push(node);
            if let Some(((_, _, depth), slice)) = pending.next_if(|((j, _, _), _)| *j == i) {
                merged.push(Node { slice, depth });
            }
        }
        nodes = merged;
    }
    let mut family = track_slices(nodes.into_iter().map(|n| n.slice).collect(), opts)?;
    family.refinements = refinements;
    Ok(family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Provenance;

    fn slice(t: f64, window: f64, values: &[f64]) -> SpectrumSlice {
        let v = values.iter().enumerate().map(|(i, &x)| (x, Provenance::Fem { index: i })).collect();
        SpectrumSlice::new(t, window, v, 1e-12, true)
    }

    fn lattice(t: f64, window: f64) -> SpectrumSlice {
        let v: Vec<f64> = (-5..=5).map(|j| j as f64 + t).filter(|x: &f64| x.abs() <= window).collect();
        slice(t, window, &v)
    }

    #[test]
    fn lattice_offsets_count_entries() {
        let opts = TrackOptions::default();
        let a = lattice(0.9, 2.5).values();
        let b = lattice(1.0, 2.5).values();
        // -2.1 ... 1.9 → -2 ... 2: nothing enters, five values each side
        let m = match_slices(&a, &b, 2.5, &opts).unwrap();
        assert_eq!((m.offset, m.ambiguous), (0, false));
        let a = lattice(0.4, 2.5).values();
        let b = lattice(0.6, 2.5).values();
        // -1.6.. 2.4 → -2.4 ... 1.6: -2.4 entered at the bottom, 2.4 left
        let m = match_slices(&a, &b, 2.5, &opts).unwrap();
        assert_eq!(m.offset, 1);
        assert!((m.cost - 0.2).abs() < 1e-12);
    }

    #[test]
    fn constant_slices_have_horizontal_bands() {
        let s: Vec<_> = (0..5).map(|k| slice(k as f64 * 0.25, 3.0, &[-1.0, 0.5, 2.0])).collect();
        let fam = track_slices(s, &TrackOptions::default()).unwrap();
        assert_eq!(fam.num_bands(), 3);
        assert_eq!(fam.net_flow(-1e-6), 0);
        assert!(fam.crossings(-1e-6).is_empty());
    }

    #[test]
    fn sorted_matching_relabels_at_a_crossing() {
        // λ = t and λ = 1 - t cross at t = ½
        let s: Vec<_> = (0..=4).map(|k| k as f64 * 0.25).map(|t| slice(t, 3.0, &[t, 1.0 - t])).collect();
        let fam = track_slices(s, &TrackOptions::default()).unwrap();
        assert_eq!(fam.num_bands(), 2);
        let lower: Vec<f64> = fam.band(0).iter().map(|p| p.1).collect();
        assert_eq!(lower, vec![0.0, 0.25, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn single_descending_band() {
        let s: Vec<_> = (0..=4).map(|k| k as f64 * 0.25).map(|t| slice(t, 2.0, &[0.5 - t])).collect();
        let fam = track_slices(s, &TrackOptions::default()).unwrap();
        assert_eq!(fam.net_flow(-1e-6), -1);
        let c = fam.crossings(-1e-6);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].direction, -1);
        assert!((c[0].t - 0.5).abs() < 1e-5);
    }

    struct Lattice;

    impl SliceSolver for Lattice {
        fn slice(&self, t: f64, window: f64) -> Result<SpectrumSlice> {
            Ok(lattice(t, window))
        }
        fn eig_tol(&self) -> f64 {
            1e-12
        }
        fn zero_tol(&self) -> f64 {
            1e-12
        }
        fn intrinsic_labels(&self) -> bool {
            false
        }
        fn name(&self) -> &'static str {
            "lattice"
        }
    }

    #[test]
    fn coarse_grid_is_refined() {
        let fam = track_bands(&Lattice, &[0.0, 0.5, 1.0], 2.5, &TrackOptions::default()).unwrap();
        assert!(fam.refinements > 0);
        assert_eq!(fam.net_flow(-1e-6), 1);
        let up: i64 = fam.crossings(-1e-6).iter().map(|c| c.direction as i64).sum();
        assert_eq!(up, 1);
    }
}
