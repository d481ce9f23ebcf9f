//! Grids, Fourier-side calculus and norms.
//!
//! Horizontal fields live on a torus and are stored as Fourier coefficients
//! normalized so that `e^{ix}` has unit coefficient. Vertical structure uses
//! Chebyshev–Lobatto nodes on `[-h, 0]`. Every pointwise product is followed
//! by 2/3-rule truncation.

mod field2;
mod field3;
mod grid;
mod vertical;

pub use field2::{hodge_decompose, smoothing_op, Field2, SmoothStep, VectorField2, TOL_MEAN};
pub use field3::{Field3, VectorField3};
pub use grid::HGrid;
pub use vertical::{cheb_nodes, clenshaw_curtis, diff_matrix, VGrid};

pub use num_complex::Complex64 as C64;
