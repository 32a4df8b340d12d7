pub mod adaptive;
pub mod baselines;
pub mod error;
pub mod inference;
pub mod linalg;
pub mod lp;
pub mod program;
pub mod sim;
pub mod stat_math;

pub use error::{Error, Result};
