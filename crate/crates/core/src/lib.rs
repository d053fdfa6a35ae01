pub mod entanglement;
pub mod error;
pub mod kernels;
pub mod numerics;
pub mod protocols;
pub mod schmidt;
pub mod source_model;

pub use error::{Error, Result};
