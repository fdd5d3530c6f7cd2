//! Bounded-arity trees stored in a packed-memory array under an ε-van Emde Boas layout.

pub mod error;
pub mod memory;
pub mod pma;
pub mod persist;
pub mod tree;
pub mod veb;

pub use error::{Error, FingerState, Result};
