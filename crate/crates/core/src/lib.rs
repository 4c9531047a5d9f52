//! Symbolic and numeric engine for the metric of quantum states.
//!
//! The numeric layer is generic over [`Scalar`] (`f32`, `f64`); symbolic
//! constants stay exact rationals until evaluation.

pub mod fieldeq;
pub mod frw;
pub mod geometry;
pub mod numeric;
pub mod qmetric;
pub mod scalar;
pub mod symexpr;

pub use scalar::Scalar;
pub use symexpr::{parse, Expr};

pub type Binding64 = symexpr::Binding<f64>;
pub type Binding32 = symexpr::Binding<f32>;
pub type Program64 = symexpr::Program<f64>;
