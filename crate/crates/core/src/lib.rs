//! Optimal stopping of the Walsh spider process and the sharp constant in
//! `E[D_τ] ≤ C_n √(E τ)`, where `D` is the diameter of the visited set in
//! the British rail metric (the sum of the two longest ribs).
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: adaptive Gauss–Kronrod quadrature, bracketed root finding
//!   and Chebyshev interpolation.
//! * [`domain`]: parameters, the reduced state `(x, y, z)`, the gain
//!   `y − z − x²` and the stopping-region predicate.
//! * [`boundary`]: the free boundary `φ`, its inverse `f` and the upper
//!   boundary `g`.
//! * [`value`]: the value function `U` for every `n` and the constant
//!   `C_n = 2√U(0,0,0)`.
//! * [`montecarlo`]: a grid random-walk simulator of the spider process and
//!   the statistical checks built on it.
//! * [`verify`]: property suites shared by the command line and the tests.
//! * [`cli`]: the `spider` command line.

pub mod boundary;
pub mod cli;
pub mod domain;
pub mod error;
pub mod montecarlo;
pub mod numerics;
pub mod value;
pub mod verify;

pub use boundary::BoundaryFn;
pub use domain::{gain, in_stopping_region, Params, State};
pub use error::{Error, Result};
pub use montecarlo::{PathResult, SimConfig, StoppingRule};

pub use value::{best_constant, u000, Region, ValueEvaluator};
