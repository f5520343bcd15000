//! Experiment runners, file formats and the command-line front end for
//! [`lpws_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod plot;
pub mod records;

pub use error::{CliError, Result};
pub use lpws_core;
