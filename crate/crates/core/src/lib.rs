pub mod agents;
pub mod comm;
pub mod env;
pub mod error;
pub mod experiment;
pub mod tensor;
pub mod uav;

pub use error::{Error, Result};
