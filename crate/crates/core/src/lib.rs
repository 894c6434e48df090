//! Exact first-passage, ladder and stable-limit computations for integer-lattice
//! random walks attracted to stable laws.

pub mod cli;
pub mod error;
pub mod exact;
pub mod ladder;
pub mod mc;
pub mod numeric;
pub mod regimes;
pub mod stable;
pub mod steps;

pub use error::{Error, Result};
