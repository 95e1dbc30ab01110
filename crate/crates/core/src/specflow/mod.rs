//! Spectral flow along a path of operators: band tracking, crossing counts
//! at a shifted level, the isospectral shift count, and the predicted value
//! `c_m Σ b_j μ_j`.

mod properties;
mod tracking;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem2d::{FemOptions, FemSolver};
use crate::problem::FlowProblem;
use crate::radial::{OracleSolver, RadialSolver, ShootingOptions};
use crate::spectrum::{Provenance, SliceSolver, SpectrumSlice};

pub use properties::{property_suite, PropertyCheck, PropertyReport};
pub use tracking::{match_slices, track_bands, track_slices, BandFamily, CrossingEvent, Matching, TrackOptions};

/// Shift applied to the counting level: `ε = min(s/2, max(1e-6, 2·zero_tol))`
/// where `s` is the smallest endpoint magnitude above `zero_tol`.
pub fn epsilon(first: &SpectrumSlice, last: &SpectrumSlice, zero_tol: f64) -> Result<f64> {
    let smallest = first
        .eigenvalues
        .iter()
        .chain(&last.eigenvalues)
        .map(|e| e.value.abs())
        .filter(|&v| v > zero_tol)
        .fold(f64::INFINITY, f64::min);
    if !smallest.is_finite() {
        return Err(Error::EpsilonUndefined);
    }
    Ok((0.5 * smallest).min(1e-6f64.max(2.0 * zero_tol)))
}

/// Net number of bands passing upward through `level`.
pub fn count_flow(bands: &BandFamily, level: f64) -> i64 {
    bands.net_flow(level)
}

fn label_map(slice: &SpectrumSlice) -> HashMap<Provenance, f64> {
    slice.eigenvalues.iter().map(|e| (e.provenance, e.value)).collect()
}

/// Isospectral shift: the endpoint spectra must agree (within
/// `match_tol · max(1, |λ|)`) on `[-core, core]`; every branch label is then
/// followed from `slice0` to `slice1`, a branch missing at one end counting
/// as beyond the window edge on its own side. The shift is the net number of
/// branches moving from below `level` to above it, which for equal spectra
/// is the number of positions the ordered spectrum moves.
pub fn shift_flow(slice0: &SpectrumSlice, slice1: &SpectrumSlice, core: f64, level: f64, match_tol: f64) -> Result<i64> {
    let central = |s: &SpectrumSlice| -> Vec<f64> { s.values().into_iter().filter(|v| v.abs() <= core).collect() };
    let (c0, c1) = (central(slice0), central(slice1));
    let tol = |v: f64| match_tol * v.abs().max(1.0);
    check_isospectral(&c0, &c1, core, &tol)?;
    if c0.len() < 5 {
        return Err(Error::InvalidInput(format!("shift needs >= 5 eigenvalues in the window, found {}", c0.len())));
    }
    let (m0, m1) = (label_map(slice0), label_map(slice1));
    let far = |v: f64| if v < 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut paths: Vec<(f64, f64)> = m0.iter().map(|(p, &u0)| (u0, m1.get(p).copied().unwrap_or(far(u0)))).collect();
    paths.extend(m1.iter().filter(|(p, _)| !m0.contains_key(p)).map(|(_, &u1)| (far(u1), u1)));
    Ok(paths
        .iter()
        .map(|&(u0, u1)| match (u0 < level, u1 < level) {
            (true, false) => 1,
            (false, true) => -1,
            _ => 0,
        })
        .sum())
}

fn check_isospectral(c0: &[f64], c1: &[f64], core: f64, tol: &dyn Fn(f64) -> f64) -> Result<()> {
    // two-pointer merge; unmatched values are allowed only at the core edge
    let (mut i, mut j) = (0, 0);
    let mut mismatch: f64 = 0.0;
    let edge = |v: f64| core - v.abs() <= tol(v);
    while i < c0.len() || j < c1.len() {
        match (c0.get(i), c1.get(j)) {
            (Some(&a), Some(&b)) if (a - b).abs() <= tol(a) => {
                mismatch = mismatch.max((a - b).abs());
                i += 1;
                j += 1;
            }
            (Some(&a), b) if b.is_none_or(|&b| a < b) => {
                if !edge(a) {
                    return Err(Error::NotIsospectral { mismatch: b.map_or(f64::INFINITY, |&b| (a - b).abs()) });
                }
                i += 1;
            }
            (_, Some(&b)) => {
                if !edge(b) {
                    return Err(Error::NotIsospectral { mismatch: c0.get(i).map_or(f64::INFINITY, |&a| (a - b).abs()) });
                }
                j += 1;
            }
            _ => unreachable!(),
        }
    }
    log::debug!("endpoint spectra agree to {mismatch:e}");
    Ok(())
}

/// `c_m Σ b_j μ_j`.
pub fn predict(b_hat: &[usize], mu_hat: &[i64], c_m: i64) -> Result<i64> {
    Ok(c_m * pairing(b_hat, mu_hat)?)
}

/// `Σ b_j μ_j`.
pub fn pairing(b_hat: &[usize], mu_hat: &[i64]) -> Result<i64> {
    if b_hat.len() != mu_hat.len() {
        return Err(Error::LengthMismatch { left: b_hat.len(), right: mu_hat.len() });
    }
    if mu_hat.iter().sum::<i64>() != 0 {
        return Err(Error::DegreesNotSumZero(mu_hat.to_vec()));
    }
    Ok(b_hat.iter().zip(mu_hat).map(|(&b, &m)| b as i64 * m).sum())
}

/// How the constant `c_m` enters the prediction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CmSetting {
    /// `c_2 = 1`; measured only for `m > 2`.
    #[default]
    Auto,
    Fixed(i64),
    Measure,
}

impl CmSetting {
    fn resolve(self, m: usize) -> Option<i64> {
        match self {
            CmSetting::Auto if m == 2 => Some(1),
            CmSetting::Auto | CmSetting::Measure => None,
            CmSetting::Fixed(c) => Some(c),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolverSettings {
    Oracle { eig_tol: f64 },
    Radial(ShootingOptions),
    Fem(FemOptions),
}

impl SolverSettings {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSettings::Oracle { .. } => "oracle",
            SolverSettings::Radial(_) => "radial",
            SolverSettings::Fem(_) => "fem2d",
        }
    }
}

pub fn make_solver(problem: &FlowProblem, settings: &SolverSettings) -> Result<Box<dyn SliceSolver>> {
    Ok(match settings {
        SolverSettings::Oracle { eig_tol } => Box::new(OracleSolver::new(problem, *eig_tol)?),
        SolverSettings::Radial(opts) => Box::new(RadialSolver::new(problem, opts.clone())?),
        SolverSettings::Fem(opts) => Box::new(FemSolver::new(problem, opts.clone())?),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowOptions {
    /// Half-width `Λ` of the spectral window `[-Λ, Λ]`.
    pub window: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// Points of the initial uniform `t` grid.
    pub t_points: usize,
    /// Counting level `λ₀` (shifted by `-ε`).
    pub level: f64,
    pub track: TrackOptions,
    /// Isospectrality tolerance of the shift method; solver default if unset.
    pub match_tol: Option<f64>,
    /// Extra window width for the endpoint slices of the shift method.
    pub shift_margin: f64,
    pub c_m: CmSetting,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            window: 2.5,
            t_start: 0.0,
            t_end: 1.0,
            t_points: 11,
            level: 0.0,
            track: TrackOptions::default(),
            match_tol: None,
            shift_margin: 3.0,
            c_m: CmSetting::Auto,
        }
    }
}

impl FlowOptions {
    pub fn t_grid(&self) -> Vec<f64> {
        let n = self.t_points.max(2);
        (0..n).map(|k| self.t_start + (self.t_end - self.t_start) * k as f64 / (n - 1) as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(Error::InvalidInput("window half-width must be positive".into()));
        }
        if self.t_end <= self.t_start {
            return Err(Error::InvalidInput("t_end must exceed t_start".into()));
        }
        if self.shift_margin < 0.0 || self.match_tol.is_some_and(|m| m <= 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub solver: String,
    pub sf_crossings: i64,
    pub sf_shift: Option<i64>,
    /// Why the shift method gave no value (non-isospectral endpoints, ...).
    pub shift_error: Option<String>,
    pub predicted: Option<i64>,
    pub c_m_measured: Option<f64>,
    pub epsilon: f64,
    pub level: f64,
    pub b_hat: Vec<usize>,
    pub mu_hat: Option<Vec<i64>>,
    pub crossings: Vec<CrossingEvent>,
    pub t_samples: usize,
    pub refinements: usize,
    pub methods_agree: Option<bool>,
    pub prediction_agrees: Option<bool>,
    pub slices_csv_path: Option<String>,
}

impl FlowResult {
    /// No available check disagrees.
    pub fn agrees(&self) -> bool {
        self.methods_agree != Some(false) && self.prediction_agrees != Some(false)
    }
}

#[derive(Clone, Debug)]
pub struct FlowRun {
    pub result: FlowResult,
    pub bands: BandFamily,
}

pub fn run_flow(problem: &FlowProblem, settings: &SolverSettings, options: &FlowOptions) -> Result<FlowRun> {
    let solver = make_solver(problem, settings)?;
    run_with_solver(problem, solver.as_ref(), options)
}

fn default_match_tol(solver: &dyn SliceSolver) -> f64 {
    if solver.intrinsic_labels() {
        1e-6
    } else {
        0.02
    }
}

pub fn run_with_solver(problem: &FlowProblem, solver: &dyn SliceSolver, options: &FlowOptions) -> Result<FlowRun> {
    options.validate()?;
    let bands = track_bands(solver, &options.t_grid(), options.window, &options.track)?;
    let first = bands.slices.first().unwrap();
    let last = bands.slices.last().unwrap();
    let eps = epsilon(first, last, solver.zero_tol())?;
    let level = options.level - eps;
    bands.check_level(level, options.track.edge_fraction)?;
    for s in &bands.slices[1..bands.slices.len() - 1] {
        if s.eigenvalues.iter().any(|e| (e.value - level).abs() <= solver.eig_tol()) {
            log::warn!("eigenvalue within tolerance of the counting level at t = {}", s.t);
        }
    }
    let sf_crossings = count_flow(&bands, level);
    let crossings = bands.crossings(level);

    let match_tol = options.match_tol.unwrap_or_else(|| default_match_tol(solver));
    let shift = if solver.intrinsic_labels() {
        let wide = options.window + options.shift_margin;
        solver.slice(options.t_start, wide).and_then(|s0| {
            let s1 = solver.slice(options.t_end, wide)?;
            shift_flow(&s0, &s1, options.window, level, match_tol)
        })
    } else {
        let (s0, s1) = bands.labeled_endpoints();
        shift_flow(&s0, &s1, options.window * (1.0 - options.track.edge_fraction), level, match_tol)
    };
    let (sf_shift, shift_error) = match shift {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let b_hat = problem.b_hat()?;
    let mu_hat = problem.mu_hat()?;
    let full_path = options.t_start == 0.0 && options.t_end == 1.0;
    let pair = match (&mu_hat, full_path) {
        (Some(mu), true) => Some(pairing(&b_hat, mu)?),
        _ => None,
    };
    let c_m = options.c_m.resolve(b_hat.len());
    let predicted = pair.zip(c_m).map(|(p, c)| c * p);
    let c_m_measured = pair.filter(|&p| p != 0).map(|p| sf_crossings as f64 / p as f64);
    let result = FlowResult {
        solver: solver.name().into(),
        sf_crossings,
        sf_shift,
        shift_error,
        predicted,
        c_m_measured,
        epsilon: eps,
        level,
        b_hat,
        mu_hat,
        crossings,
        t_samples: bands.slices.len(),
        refinements: bands.refinements,
        methods_agree: sf_shift.map(|s| s == sf_crossings),
        prediction_agrees: predicted.map(|p| p == sf_crossings),
        slices_csv_path: None,
    };
    Ok(FlowRun { result, bands })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(t: f64, window: f64, shift: f64) -> SpectrumSlice {
        let v = (-8..=8)
            .map(|j| (j as f64 + shift * t, Provenance::Analytic { k: j, branch: 0 }))
            .collect();
        SpectrumSlice::new(t, window, v, 1e-10, true)
    }

    #[test]
    fn epsilon_rule() {
        let a = SpectrumSlice::new(0.0, 2.0, vec![(0.0, Provenance::Fem { index: 0 }), (0.5, Provenance::Fem { index: 1 })], 1e-10, true);
        assert_eq!(epsilon(&a, &a, 1e-8).unwrap(), 1e-6);
        let b = SpectrumSlice::new(0.0, 2.0, vec![(1e-6, Provenance::Fem { index: 0 })], 1e-10, true);
        assert_eq!(epsilon(&b, &b, 1e-8).unwrap(), 5e-7);
        let z = SpectrumSlice::new(0.0, 2.0, vec![(0.0, Provenance::Fem { index: 0 })], 1e-10, true);
        assert!(matches!(epsilon(&z, &z, 1e-8), Err(Error::EpsilonUndefined)));
    }

    #[test]
    fn shift_examples() {
        let s0 = lattice(0.0, 2.5, 1.0);
        assert_eq!(shift_flow(&s0, &s0, 2.5, -1e-6, 1e-6).unwrap(), 0);
        let s1 = lattice(1.0, 2.5, 1.0);
        assert_eq!(shift_flow(&s0, &s1, 2.5, -1e-6, 1e-6).unwrap(), 1);
        // {j} → {j - 2}
        let s1 = lattice(1.0, 4.0, -2.0);
        assert_eq!(shift_flow(&lattice(0.0, 4.0, -2.0), &s1, 4.0, -1e-6, 1e-6).unwrap(), -2);
        let off = lattice(0.5, 2.5, 1.0);
        assert!(matches!(shift_flow(&s0, &off, 2.5, -1e-6, 1e-6), Err(Error::NotIsospectral { .. })));
    }

    #[test]
    fn prediction_examples() {
        assert_eq!(predict(&[0, 1], &[-1, 1], 1).unwrap(), 1);
        assert_eq!(predict(&[1, 0], &[0, 0], 1).unwrap(), 0);
        assert_eq!(predict(&[1, 1], &[-3, 3], 1).unwrap(), 0);
        assert!(matches!(predict(&[1], &[1, -1], 1), Err(Error::LengthMismatch { .. })));
        assert!(matches!(predict(&[1, 1], &[1, 1], 1), Err(Error::DegreesNotSumZero(_))));
    }

    #[test]
    fn oracle_flow_is_one() {
        let p = FlowProblem::annulus_example();
        let run = run_flow(&p, &SolverSettings::Oracle { eig_tol: 1e-10 }, &FlowOptions::default()).unwrap();
        let r = run.result;
        assert_eq!((r.sf_crossings, r.sf_shift, r.predicted), (1, Some(1), Some(1)));
        assert_eq!(r.crossings.iter().map(|c| c.direction as i64).sum::<i64>(), 1);
    }
}
