//! Dense vector/matrix primitives, initialization, the SGD update and a
//! central finite-difference gradient checker.

mod gradcheck;
mod init;
mod matrix;
mod sgd;

pub use gradcheck::{grad_check, numerical_gradient, relative_error};
pub use init::{init_uniform, init_uniform_bound, sub_seed};
pub use matrix::{Matrix, Scalar};
pub use sgd::{l2_norm, normalize_rows, sgd_step, NormOrder, SgdConfig, SparseGrad};
