//! Construction and certification of generalized Hamiltonian structures for
//! autonomous three-dimensional dynamical systems.
//!
//! Given a vector field `v` and a first integral `H`, every antisymmetric
//! structure matrix compatible with `v = J ∇H` is determined by a single
//! scalar `J` (the `(1,2)` entry). The Jacobi identity for that matrix is the
//! linear first-order PDE `v·∇J = A J + B`, whose coefficients are computed in
//! [`structure`]. Solutions come from closed-form shortcuts, integration along
//! characteristics, or polynomial collocation ([`solve`]), and every result is
//! checked by sampled residuals of the exact symbolic derivatives ([`verify`]).

pub mod catalog;
pub mod expr;
pub mod model;
pub mod solve;
pub mod structure;
pub mod verify;

mod error;

pub use error::{Error, Result};
pub use expr::{Axis, Expr, Params, Point};
pub use model::{AxisPermutation, Model3D, SampleBox};
pub use structure::{ABPair, LieTensor};
pub use verify::{Certification, ResidualReport};
