//! Reconstruction of one-dimensional wave-speed profiles from spectral
//! impedance data.
//!
//! The workflow: measured (or simulated) impedance data is reduced to
//! pole-residue pairs, a tridiagonal reduced-order model is built from those
//! pairs with a complex-symmetric Lanczos recursion, and the ROM coefficients
//! are embedded back into physical space by one of three procedures:
//!
//! * [`embed_og`] — optimal-grid embedding, trained on a homogeneous
//!   reference medium;
//! * [`embed_krein`] — Krein embedding, a training-free mass-function
//!   reconstruction;
//! * [`embed_kn`] — Krein-Nudelman embedding for semi-infinite domains with
//!   complex (passive) spectral data.

pub mod embed_kn;
pub mod embed_krein;
pub mod embed_og;
pub mod error;
pub mod forward;
pub mod linalg;
pub mod medium;
pub mod metrics;
pub mod passivity;
pub mod pipeline;
pub mod ratfit;
pub mod rom;
pub mod spectral;

pub use error::{Error, Result};
