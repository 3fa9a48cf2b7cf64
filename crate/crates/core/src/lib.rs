//! Operator growth in the energy eigenbasis.
//!
//! Builds model spectra and observables, runs the Liouvillian Lanczos
//! recursion under the thermal (Wightman) inner product, and analyses the
//! resulting Lanczos coefficients, moments and Krylov complexity.

// `!(x > 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dd;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod lanczos;
pub mod linalg;
pub mod models;
pub mod par;
pub mod quad;
pub mod spectral;
pub mod spin;

pub use error::{Error, Result};
pub use spectral::{
    liouville_apply, normalize, thermal_inner, thermal_inner_with, EigenbasisOperator, LiouvilleVector,
    Precision, Spectrum, ThermalEnsemble,
};
