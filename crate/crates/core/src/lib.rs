pub mod arcs;
pub mod complete_sums;
pub mod config;
pub mod envelope;
pub mod error;
pub mod expander;
pub mod experiments;
pub mod major;
pub mod ntheory;
pub mod numeric;
pub mod oscillatory;
pub mod report;
pub mod weyl;

pub use error::{Error, Result};
