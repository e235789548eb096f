pub mod classical;
pub mod cli;
pub mod dd;
pub mod error;
pub mod exact;
pub mod linalg;
pub mod report;
pub mod rmatrix;
pub mod tensorops;
pub mod theta;
pub mod verify;

pub use error::{Error, Result};
