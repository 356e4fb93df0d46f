//! Secure distributed matrix multiplication over prime fields.
//!
//! Two secret matrices are split into a block grid, masked with uniformly
//! random matrices, and evaluated at the powers of a primitive `N`-th root
//! of unity. Each of `N` honest-but-curious servers multiplies one pair of
//! evaluations; the user recovers `AB` exactly from all `N` products while
//! any `T` colluding servers learn nothing about either input.

pub mod cli;
pub mod cost;
pub mod field;
pub mod grid;
pub mod harness;
pub mod scheme;
