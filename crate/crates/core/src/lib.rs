//! Random attention models: choice synthesis from preferences and attention
//! rules, population revealed-preference analysis, and moment-inequality
//! inference on preferences from choice data.

pub mod attention;
pub mod constraints;
pub mod domain;
pub mod error;
pub mod estimation;
pub mod inference;
pub mod lp;
pub mod revelation;
pub mod rng;

pub use error::{RamError, Result};
