//! Lagrange spaces, bases and quadrature.

pub mod basis;
pub mod quadrature;
pub mod space;

pub use basis::{eval_basis, BasisValues, Family};
pub use quadrature::{edge_rule, simplex_rule, EdgeRule, QuadRule};
pub use space::{
    build_space, element_laplacian, point_evaluate, weighted_grad_norm, DofMap, ElementMap, FieldVec, PointValue,
};
