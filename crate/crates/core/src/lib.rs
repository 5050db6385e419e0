//! Probability calculus over density matrices.
//!
//! Density matrices play the role of distributions, dyads `uuᵀ` the role of
//! elementary events, and the product `A ⊙ B = expm(logm A + logm B)`
//! replaces the elementwise product, giving joints, marginals, conditionals
//! and Bayes rules that reduce to the familiar ones for diagonal matrices.

pub mod bayes;
pub mod conditional;
pub mod density;
pub mod error;
pub mod io;
pub mod odot;
pub mod sample;
pub mod symlin;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use odot::{odot, odot_all, odot_limit};
pub use symlin::{OrthonormalBasis, PsdMatrix, SymmetricMatrix, UnitVector};
