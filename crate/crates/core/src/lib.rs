//! Local expectation values on injective PEPS by contracting only a finite
//! patch around the observable.
//!
//! The estimate on a radius-ℓ patch closes every bond leaving the patch with
//! the identity between ket and bra and approaches the exact value
//! exponentially fast in ℓ for states with a uniformly gapped parent
//! Hamiltonian. Alongside the estimator the crate provides an exact oracle,
//! transfer-operator spectra, parent-Hamiltonian gaps for chains and a
//! simulated sampling estimator.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod doubled;
pub mod error;
pub mod estimator;
pub mod format;
pub mod generators;
pub mod lanczos;
pub mod lattice;
pub mod linalg;
pub mod network;
pub mod observable;
pub mod oracle;
pub mod par;
pub mod parent;
pub mod patch;
pub mod peps;
pub mod sampling;
pub mod tensor;
pub mod transfer;

pub use error::{Error, ErrorClass, Result};
pub use estimator::{adaptive_estimate, choose_radius, error_bound, patch_expectation, Estimate, EstimatorConfig};
pub use lattice::LatticeSpec;
pub use observable::Observable;
pub use oracle::{exact_correlation, exact_expectation, OracleResult};
pub use peps::{PepsState, SiteTensor};
pub use tensor::DenseTensor;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
