pub mod distributions;
pub mod duality;
pub mod error;
pub mod harness;
mod hybrid;
pub mod instance;
pub mod lp;
pub mod mechanism;
pub mod private_budget;
pub mod rational;
pub mod report;
pub mod simple;
pub mod structure;

pub use error::{Error, Result};
pub use rational::Rational;
