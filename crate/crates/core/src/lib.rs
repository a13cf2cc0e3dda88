//! Semismooth Newton solvers for piecewise-linear systems over the
//! second-order cone and for linear second-order cone complementarity
//! problems, plus problem generators and a benchmark harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod linalg;
pub mod lsoccp;
mod newton;
pub mod probgen;
pub mod problem_file;
pub mod pwls;
pub mod soc;
pub mod vector;

pub use error::{Error, Result};
pub use newton::V_FIXPOINT_TOL;
