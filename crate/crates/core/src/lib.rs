//! Fourier transform of the surface measure of the Stiefel manifold
//! `St(n, k) = { X ∈ ℝ^{n×k} : XᵀX = I }`, computed by Monte Carlo over
//! Haar samples, exact quadrature, closed forms and leading-order
//! stationary phase, together with the manifold geometry that the
//! stationary-phase formula rests on.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod estimate;
pub mod evaluate;
pub mod exact;
pub mod geometry;
pub mod haar;
pub mod linalg;
pub mod quadrature;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use estimate::{total_mass, ErrorEstimate, FourierEstimate, Method, Normalization};
pub use linalg::{frobenius_pairing, qr_positive, svd, Matrix, SingularSpectrum, Svd};
