//! Telescopic relative entropy between quantum states.
//!
//! For states ρ, σ and a telescope parameter a ∈ (0, 1),
//!
//! ```text
//! S_a(ρ‖σ) = S(ρ ‖ aρ + (1−a)σ) / (−log a)
//! ```
//!
//! where `S(ρ‖σ) = trace ρ(log ρ − log σ)` is the ordinary relative entropy. Unlike `S`,
//! `S_a` is always finite and lies in `[0, 1]`.
//!
//! The crate provides:
//!
//! - validated Hermitian, PSD and density matrices ([`operator`]),
//! - first and second Fréchet derivatives of the matrix log ([`frechet`]) plus an
//!   independent resolvent-quadrature implementation ([`quadrature`]),
//! - the divergences, their endpoint limits and gradients ([`divergence`]),
//! - a seeded certification harness for the known inequalities ([`harness`]).

// Negated comparisons are deliberate: NaN must fail every range check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod divergence;
pub mod error;
pub mod frechet;
pub mod harness;
pub mod matrix_io;
pub mod operator;
pub mod quadrature;

pub use divergence::{tre, tre_limit, tre_scalar, relative_entropy, DivergenceResult, Endpoint};
pub use error::{Error, Result};
pub use operator::{DensityMatrix, HermitianMatrix, PsdMatrix, ToleranceConfig};
