//! Essential schedulings of PV programs via the index poset of hole
//! extensions, and shadow automata for programs whose threads loop.

pub mod absint;
pub mod cli;

pub mod error;
pub mod geometry;
pub mod index_poset;
pub mod lang;
pub mod oracle;
pub mod shadow;

pub use error::{Error, Result};
