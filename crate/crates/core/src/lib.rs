//! Exact computation in the Grassmannians of a finite vector space.

pub mod error;
pub mod gf;
pub mod grassmann;
pub mod linalg;

pub use error::{Error, Result};
pub mod forms;
pub mod maps;
pub mod regularity;
pub mod irregularity;
pub mod reconstruction;
