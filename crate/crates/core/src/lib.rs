//! Gridless 2-D direction-of-arrival estimation for uniform and sparse
//! L-shaped arrays.
//!
//! The cross-covariance between the two arms is noise-free in expectation and
//! is a positive combination of atoms `conj(a_x(α)) ⊗ a_y(β)`. Its atomic
//! norm is computed by a small SDP over a two-level Toeplitz matrix, from
//! which the paired angles are read off by 2-D ESPRIT. Two data-fit models
//! are provided: a Euclidean ball of radius `η` (CC-ANM) and a whitened
//! chi-square ellipsoid built from the asymptotic error covariance (MCC-ANM).

pub mod array_model;
pub mod bench;
pub mod cjson;
pub mod covariance;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod retrieval;
pub mod solver;
pub mod toeplitz;

pub use error::{Error, Result};
