pub mod error;
pub mod grid;
pub mod measure;
pub mod mixture;
pub mod models;
pub mod numerics;
pub mod pd;
pub mod posterior;
pub mod prior;
pub mod sim;

pub use error::{Error, QuadError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
