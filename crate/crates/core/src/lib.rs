//! Marcinkiewicz integrals with rough kernels on uniform grids.
//!
//! Every operator works on [`GridFunction`]s over a box `[-L, L]^n` and
//! replaces "all balls" by a finite family (every evaluation-window center
//! crossed with a radius ladder). Integrals use the counting measure `h^n`
//! per grid point.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod kernel;
pub mod marcinkiewicz;
pub mod maximal;
pub mod orlicz;
pub mod weight;

mod stencil;

pub use error::{Error, Result};
pub use grid::{ball_family, Ball, Grid, GridFunction};
pub use kernel::{builtin_kernel, Kernel, KernelReport};
pub use marcinkiewicz::{Commutator, MuOperator};
pub use orlicz::{SymbolFamily, YoungFunction};
pub use weight::Weight;
