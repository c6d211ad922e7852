//! Symbolic classification of systems of second-order ODEs for the inverse
//! problem of the calculus of variations.

pub mod classify;
pub mod eigen;
pub mod expr;
pub mod forms;
pub mod geometry;
pub mod helmholtz;
pub mod linalg;
pub mod problem;
pub mod report;
pub mod selftest;
