//! Numerical toolkit for charged initial data sets with an asymptotically
//! anti-de Sitter end: Einstein-Maxwell constraint densities, dominant energy
//! condition checks, Killing initial data at infinity, energy-momentum and
//! electric charge via sphere quadrature with radial extrapolation, the
//! spinor positivity cone, and inner-boundary admissibility diagnostics.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod boundary;
pub mod charges;
pub mod clifford;
pub mod constraints;
mod fmath;
pub mod geometry;
pub mod kids;
pub mod linalg;
pub mod models;
pub mod sphere;

use alloc::string::String;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension must be at least 3, got {0}")]
    InvalidDimension(usize),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("vector is not unit (|v| = {norm})")]
    NotUnit { norm: f64 },
    #[error("outside chart domain: {0}")]
    Domain(String),
    #[error("degenerate metric (det = {det})")]
    DegenerateMetric { det: f64 },
    #[error("derivative stencil does not fit the grid: {0}")]
    Stencil(String),
    #[error("NaN sample at angular node {node}")]
    NanSample { node: usize },
    #[error("model domain error: {0}")]
    ModelDomain(String),
    #[error("internal consistency check failed: {0}")]
    Inconsistency(String),
}

pub type Result<T> = core::result::Result<T, Error>;

/// Construction tag embedded in reports so that numerical results can be
/// traced to the exact gamma-matrix realization they were computed with.
pub const CLIFFORD_REP_TAG: &str = "pauli-tensor-v1";
