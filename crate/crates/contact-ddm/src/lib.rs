//! Solvers for plane unilateral multibody contact problems of linear
//! elasticity, based on the penalty method and parallel Robin-Robin type
//! domain decomposition iterations.
//!
//! A contact problem between `N` elastic bodies is regularized by a penalty
//! term that replaces the nonpenetration constraint with a stiff fictitious
//! layer between the bodies. The resulting nonlinear variational equation is
//! solved by a stationary (or nonstationary) fixed-point iteration that
//! decouples into independent subdomain solves with Robin conditions on the
//! possible contact zones, exchanged between iterations.
//!
//! Module map:
//! - [`mesh`]: structured triangulations of rectangular bodies with tagged
//!   boundary parts (Dirichlet, Neumann, contact).
//! - [`material`]: plane-elasticity constitutive matrices (isotropic and
//!   transversely isotropic).
//! - [`fem`]: operator assembly, Dirichlet elimination, sparse SPD solves,
//!   boundary traces.
//! - [`contact`]: gap functions, node pairing, penalty residuals and
//!   energies, contact subarea policies.
//! - [`ddm`]: the iteration engine, stopping criterion, convergence
//!   reporting, rate estimation, error-injection studies.
//! - [`experiments`]: preconfigured benchmark problems, parameter sweeps and
//!   CSV emitters.

pub mod contact;
pub mod ddm;
pub mod experiments;
pub mod fem;
pub mod material;
pub mod mesh;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("selector matched no boundary edge: {0}")]
    NoMatch(String),
    #[error("boundary tag conflict: {0}")]
    TagConflict(String),
    #[error("unknown contact pair {0}")]
    UnknownPair(u32),
    #[error("nonmatching contact discretizations: {0}")]
    NonMatchingMesh(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("size mismatch: expected {expected}, got {got} ({context})")]
    SizeMismatch {
        expected: usize,
        got: usize,
        context: String,
    },
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("divergence detected at iteration {iteration}: {detail}")]
    Divergence { iteration: usize, detail: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("reference oracle failed: {0}")]
    Oracle(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
