//! Minimal dense numeric core: matrices, named parameter slots, a
//! reverse-mode tape over a fixed operator set, optimizers, and
//! finite-difference gradient checking. 64-bit reals throughout.

mod gradcheck;
mod matrix;
mod optim;
mod params;
mod tape;

pub use gradcheck::{check_gradients, GradCheckOptions, GradCheckReport};
pub use matrix::Matrix;
pub use optim::{Adam, Optimizer, OptimizerKind, Sgd};
pub use params::{ParamId, ParamStore};
pub use tape::{softmax_by_rows, NodeId, Tape};
