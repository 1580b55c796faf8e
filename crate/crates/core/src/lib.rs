//! Additive complements of digit-restricted ternary block sets, the
//! concatenation fractals they generate, density sets with short rational
//! descriptions, and finite-scale measure checks.

pub mod bits;
pub mod catalog;
pub mod complement;
pub mod density;
pub mod error;
pub mod fractal;
pub mod measure;
pub mod ternary;

pub use error::{Error, Result};
