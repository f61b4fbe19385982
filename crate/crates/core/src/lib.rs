pub mod cli;
pub mod closed_form;
pub mod error;
pub mod greedy;
pub mod lp;
pub mod numeric;
pub mod region;
pub mod routing;
mod simplex;
pub mod storage;

pub use error::{Error, Result};
