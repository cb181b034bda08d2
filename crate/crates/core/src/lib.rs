//! Exact cohomological pullbacks and dynamical degrees for the maps
//! `f_rho = g_rho ∘ s` on Kapranov's model of M̄_{0,n}, where `s` lifts
//! coordinate-wise squaring and `g_rho` relabels the marked points.

pub mod combinat;
pub mod error;
pub mod keel;
pub mod linalg;
pub mod pullback;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
