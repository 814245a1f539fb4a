//! Reverse-mode automatic differentiation for small dense networks.
//!
//! A [`Graph`] records operations on [`Tensor`]s as they are evaluated; a
//! single [`Graph::backward`] call then fills in the gradient of a scalar loss
//! for every node that depends on a parameter. Complex matrices are carried as
//! [`ComplexVar`] real/imaginary pairs.
//!
//! ```
//! use autodiff::{Graph, Tensor};
//!
//! let mut g = Graph::new();
//! let x = g.param(Tensor::scalar(3.0));
//! let y = g.mul(x, x).unwrap();
//! g.backward(y).unwrap();
//! assert_eq!(g.grad(x).unwrap().data(), &[6.0]);
//! ```

mod adam;
mod complex;
mod conv;
mod error;
mod gemm;
mod gradcheck;
mod graph;
mod op;
mod ops;
mod tensor;

pub use adam::{AdamConfig, AdamState, StepOutcome};
pub use complex::ComplexVar;
pub use error::{AutodiffError, Result};
pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport};
pub use graph::{Graph, Var};
pub use op::CustomVjp;
pub use ops::LOG_FLOOR;
pub use tensor::Tensor;
