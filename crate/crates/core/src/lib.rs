#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

//! Bernstein discontinuous Galerkin discretizations of hyperbolic
//! conservation laws with monolithic convex limiting.

pub mod benchmarks;
pub mod bernstein;
pub mod dg_target;
pub mod discretization;
pub mod error;
pub mod io;
pub mod law;
pub mod low_order;
pub mod mesh;
pub mod limiter;
pub mod quadrature;
pub mod runner;
pub mod solver;
pub mod time_integration;
pub mod verify;

pub use error::{Error, Result};
pub use solver::{Scheme, Solver};
