pub mod brackets;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod gauge;
pub mod numerics;
pub mod phase_space;
pub mod quantum;

pub use error::{Error, Result};
