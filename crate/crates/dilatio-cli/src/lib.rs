//! Library surface of the batch driver, exposed so integration tests can
//! exercise config parsing and the runner directly.

pub mod config;
pub mod runner;
