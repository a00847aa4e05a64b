#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptivity;
pub mod assembly;
pub mod config;
pub mod error;
pub mod estimator;
pub mod fem;
pub mod io;
pub mod mesh;
pub mod solver;
pub mod sparse_lu;

pub use error::{Error, Result};
pub use mesh::{Domain, Mesh, Point2};
