pub mod encoding;
pub mod error;
pub mod experiment;
pub mod features;
pub mod node;
pub mod readout;
pub mod reservoir;
pub mod tasks;

pub use error::{Error, ErrorKind, Result};
