use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("inner radius {r_in} must be smaller than outer radius {r_out}")]
    RadiiOutOfOrder { r_in: f64, r_out: f64 },
    #[error("mesh too coarse: need n_r >= 1 and n_phi >= 3, got n_r={n_r}, n_phi={n_phi}")]
    TooCoarse { n_r: usize, n_phi: usize },
    #[error("{}:{line}: {message}", file.display())]
    ParseError { file: PathBuf, line: usize, message: String },
    #[error("non-conforming mesh: {0}")]
    NonConformingMesh(String),
    #[error("boundary edge {a}-{b} has no component label")]
    UnlabeledBoundary { a: usize, b: usize },
    #[error("inconsistent orientation: {0}")]
    InconsistentOrientation(String),
    #[error("unknown boundary component {0}")]
    UnknownComponent(usize),
    #[error("winding center ({x}, {y}) lies inside the domain")]
    CenterInsideDomain { x: f64, y: f64 },
    #[error("winding number on component {component} did not converge")]
    NonConvergentWinding { component: usize },
    #[error("boundary matrix changes sign pattern along component {component}")]
    SignChangeOnComponent { component: usize },
    #[error("matrix not invertible: smallest singular value {sigma_min:e}")]
    NotInvertible { sigma_min: f64 },
    #[error("matrix not Hermitian: defect {defect:e}")]
    NotHermitian { defect: f64 },
    #[error("boundary data not elliptic: Λ={lambda}, φ={phi}")]
    NotElliptic { lambda: f64, phi: f64 },
    #[error("configuration is not the analytic annulus oracle: {0}")]
    NotOracleConfiguration(String),
    #[error("problem is not rotationally symmetric: {0}")]
    NotRotationallySymmetric(String),
    #[error("shooting scan could not certify completeness for mode {k}")]
    ScanResolutionExhausted { k: i64 },
    #[error("mode window too small: sentinel mode {k} has eigenvalues in the window")]
    ModeWindowTooSmall { k: i64 },
    #[error("conormal image n' vanishes at boundary node {node}")]
    SingularNPrime { node: usize },
    #[error("mesh invariant violated: {0}")]
    MeshInvariantViolation(String),
    #[error("eigensolver failed: {0}")]
    EigensolveFailure(String),
    #[error("band refinement budget exhausted near t={t}")]
    RefinementBudgetExhausted { t: f64 },
    #[error("epsilon undefined: endpoint spectra have no nonzero eigenvalue")]
    EpsilonUndefined,
    #[error("endpoint spectra are not isospectral (mismatch {mismatch:e})")]
    NotIsospectral { mismatch: f64 },
    #[error("isospectral shift is ambiguous")]
    AmbiguousShift,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("winding degrees do not sum to zero: {0:?}")]
    DegreesNotSumZero(Vec<i64>),
    #[error("property {property} violated: {detail}")]
    PropertyViolation { property: String, detail: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
