pub mod config;
pub mod error;
pub mod ingest;
pub mod instrument;
pub mod lsm;
pub mod pricing;
pub mod regime;
pub mod rng;
pub mod run;
pub mod scenario;
pub mod sensitivity;
pub mod srmr;
pub mod stats;

pub use error::{Error, Result};
