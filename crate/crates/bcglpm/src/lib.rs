//! File formats, realized-volatility preprocessing, rolling-window driver and
//! configuration for the `bcglpm` command line tool.

pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod prices;

pub use error::{AppError, Result};
