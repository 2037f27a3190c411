//! Nonlinear-acoustics model hierarchy: pseudo-spectral solvers for the
//! Kuznetsov, Westervelt, KZK and NPE equations and for isentropic
//! Navier–Stokes, the ansatz maps linking them, and exact remainder terms.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values, and
// index loops over several parallel arrays read better than zipped iterators.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ansatz;
pub mod calculus;
pub mod coefficients;
pub mod error;
pub mod frames;
pub mod grid;
pub mod interp;
pub mod ns_euler;
pub mod operators;
pub mod paf1;
pub mod remainders;
pub mod solvers;
pub mod spectral;

pub use coefficients::ModelCoefficients;
pub use error::{Error, Result};
pub use grid::{Axis, Field, Frame, Grid};
