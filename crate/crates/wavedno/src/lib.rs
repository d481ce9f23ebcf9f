//! Generalized Dirichlet–Neumann operator for three-dimensional gravity
//! water waves with vorticity.
//!
//! Three routes compute the same operator and check one another:
//!
//! * [`solver`]: a Green-matrix fixed point on the straightened strip,
//! * [`expansion`]: the homogeneous Taylor recursion in the surface elevation,
//! * [`paralin`]: the paralinearized representation,
//!
//! with [`oracle`] providing an independent finite-difference solver and the
//! slope fits used by the convergence tests.

pub mod error;
pub mod expansion;
pub mod geometry;
pub mod greens;
pub mod io;
pub mod oracle;
pub mod paralin;
pub mod solver;
pub mod spectral;

pub mod guide;

pub use error::{Error, Result};
