//! Repeated-interaction ("collision") dynamics of a small fermionic system
//! coupled to two structured baths, each represented as a tight-binding chain.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod correlation;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod negf;
pub mod pipeline;
pub mod propagator;
pub mod quad;
pub mod spectral;
pub mod sweep;
pub mod thermo;
pub mod validation;

pub use error::{PrebError, Result};
