pub mod aggregate;
pub mod calendar;
pub mod error;
pub mod geocell;
pub mod indicators;
pub mod ingest;
pub mod lec;
pub mod mobility;
pub mod quality;
pub mod timeutil;

pub use error::{Error, Result};
