//! K- and D-functionals on finite atomic Banach lattices, `p`-convexified
//! couples, and construction of operators `L` with `Lf = g` between
//! K-ordered elements.

pub mod error;
pub mod campaign;
pub mod extension;
pub mod instance;
pub mod kfunc;
pub mod lattice;
pub mod majorization;
pub mod solver;

pub use error::{Error, Result};
