//! Numerical laboratory for Muckenhoupt-type conditions on quasi-Banach function spaces over a
//! dyadic mesh of the unit cube.

pub mod cli;
pub mod constants;
pub mod dyadic;
pub mod error;
pub mod operators;
pub mod search;
pub mod spaces;
pub mod verify;

pub use error::{Error, Result};
