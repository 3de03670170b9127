pub mod correlation;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod garch;
pub mod linalg;
pub mod mean;
pub mod optim;
pub mod sim;
pub mod timeseries;

pub use error::{Error, Result};
