//! File formats, parallel sweeps and the command-line front end for
//! [`kicq_core`].

pub mod cli;
pub mod device;
pub mod error;
pub mod io;
pub mod parallel;
pub mod report;

pub use error::{Error, Result};
