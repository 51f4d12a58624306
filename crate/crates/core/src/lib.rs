pub mod cli;
pub mod error;
pub mod factorize;
pub mod harness;
pub mod itersplit;
pub mod matkernel;
pub mod oracle;

pub use error::{Error, Result};
