pub mod auction;
pub mod bidders;
pub mod config;
pub mod error;
pub mod grid;
pub mod harness;
pub mod pricing;
pub mod rng;
pub mod tree;

pub use error::{Error, Result};
