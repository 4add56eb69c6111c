//! Dense arrays, reverse-mode differentiation, seeded randomness and a
//! finite-difference oracle.

mod fd;
mod rng;
mod tape;
mod tensor;

pub use fd::{finite_difference_grad, relative_error};
pub use rng::Rng;
pub use tape::{Tape, Var, LEAKY_SLOPE};
pub use tensor::Tensor;

pub(crate) use tape::log_softmax_row;
