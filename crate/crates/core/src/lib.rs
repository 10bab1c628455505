//! Translating solitons of the mean curvature flow in R^3 and R^4, built
//! from a pair of Gauss maps and checked by finite differences.

pub mod catalog;
pub mod cli;
pub mod export;
pub mod expr;
pub mod gaussmap;
pub mod grid;
pub mod immersion;
pub mod nullcurve;
pub mod pipeline;
pub mod report;
pub mod verify;

pub use num_complex::Complex64;
