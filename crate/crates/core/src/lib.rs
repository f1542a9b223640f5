//! Bernstein operators on the simplex, Wright-Fisher chains and diffusions,
//! and their discretized Fleming-Viot counterparts.

pub mod bernstein;
pub mod error;
pub mod fleming_viot;
pub mod generator;
pub mod moments;
pub mod mutation;
pub mod polynomial;
pub mod semigroup;
pub mod simplex;
pub mod stats;

pub use error::{Error, Result};
pub use polynomial::Polynomial;
pub use simplex::{LatticeIndex, RngStream, SimplexPoint};
