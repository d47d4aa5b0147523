//! Numerical laboratory for the cubic map `f_a(z) = z((z+a)(z-2)+1)` and the
//! gradient-descent training dynamics it models exactly: generalized phase
//! retrieval and two-layer quadratic-activation networks on orthogonal data.
//!
//! The map side lives in [`cubic_map`], [`phase_analysis`] and
//! [`diagnostics`]; the model side in [`quad_models`], [`data_gen`] and
//! [`predictor`].

pub mod cubic_map;
pub mod data_gen;
pub mod diagnostics;
pub mod error;
pub mod phase_analysis;
pub mod predictor;
pub mod quad_models;

pub use error::{Error, Result};
