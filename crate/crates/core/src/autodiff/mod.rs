//! Small reverse-mode automatic differentiation engine.
//!
//! Only the primitives the controller needs are provided. There is no
//! broadcasting: every shape mismatch is an error.

mod adam;
mod gradcheck;
mod params;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamState, BETA1, BETA2, EPSILON};
pub use gradcheck::{finite_difference_check, relative_error, GradCheck};
pub use params::{Gradients, Param, ParamId, ParamStore};
pub use tape::{forward, Primitive, Tape, Var};
pub use tensor::Tensor;

#[cfg(test)]
mod tests;
