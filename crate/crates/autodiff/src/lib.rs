//! Reverse-mode automatic differentiation for small dense models.
//!
//! Values live in row-major [`Tensor`]s. A [`Tape`] records every forward
//! operation; [`Tape::backward`] walks it in reverse and accumulates
//! gradients into the [`ParamStore`] that supplied the parameters. The tape
//! is meant to be built, differentiated and dropped once per step.
//!
//! Everything is generic over [`Real`], so the same model code runs in `f32`
//! for training and in `f64` for finite-difference verification.

mod adam;
mod error;
mod gradcheck;
mod param;
mod real;
mod tape;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use error::{AutodiffError, Result};
pub use gradcheck::{grad_check, GradCheckConfig};
pub use param::{ParamId, ParamStore, Parameter};
pub use real::Real;
pub use tape::{Tape, Var, MASK_NEG};
pub use tensor::Tensor;
