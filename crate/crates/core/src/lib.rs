pub mod channel;
pub mod codebook;
pub mod config;
pub mod dispersion;
pub mod error;
pub mod infotheory;
pub mod matkit;
pub mod plot;
pub mod report;
pub mod simengine;
mod textfmt;
pub mod verify;

pub use error::{Error, Result};
