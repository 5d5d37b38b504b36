#![no_std]
// Builds that link std (tests, dev-dependencies) get inherent float methods that shadow `Float`.
#![allow(unused_imports)]
// `!(x > 0.0)` is the NaN-rejecting form used throughout for argument checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod asymptotics;
pub mod bernstein;
mod error;
pub mod fft;
pub mod kernel;
pub mod linalg;
pub mod quad;
pub mod series;
pub mod special;
pub mod subordinator;
pub mod walk;

pub use error::{Error, Result};
