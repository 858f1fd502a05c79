//! Dense linear algebra, least squares, seeded randomness and a small
//! reverse-mode tape for backpropagation through time.

mod matrix;
mod ols;
mod rng;
mod tape;

pub use matrix::Matrix;
pub use ols::{ols_fit, ols_fit_with_fallback};
pub use rng::{uniform_init, RngState};
pub use tape::{finite_difference, GradTape, Gradients, ParamId, Var};
