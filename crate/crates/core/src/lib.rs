//! Numerical toolkit for steady free-boundary Beltrami flows over a
//! doubly periodic cell: mapped geometry, field operators, vector-potential
//! construction and the variational functionals.

pub mod cli;
pub mod elliptic;
pub mod error;
pub mod fields;
pub mod functionals;
pub mod geometry;
pub mod potential;
