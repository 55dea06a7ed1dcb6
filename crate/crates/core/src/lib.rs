pub mod blockstats;
pub mod dimension;
pub mod error;
pub mod experiments;
pub mod martingale;
pub mod numstream;
pub mod ratio;
pub mod repsys;
pub mod search;
mod textfmt;
pub mod transducer;

pub use error::{Error, Result};
