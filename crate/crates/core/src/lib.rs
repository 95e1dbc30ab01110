//! Spectral flow of Dirac-type operators on planar domains under gauge
//! transformations.
//!
//! The crate provides the geometric data ([`domain`], [`mesh`]), the
//! operator family ([`operator`]), local elliptic boundary conditions
//! ([`boundary`]), two eigenvalue solvers ([`radial`] for rotationally
//! symmetric annuli, [`fem2d`] for general meshes) and the flow machinery
//! in [`specflow`].

pub mod boundary;
pub mod domain;
pub mod error;
pub mod fem2d;
pub mod linalg;
pub mod mesh;
pub mod operator;
pub mod problem;
pub mod profile;
pub mod radial;
pub mod specflow;
pub mod spectrum;

pub use error::{Error, Result};
