//! Datasets, file formats, experiment drivers and the `hqmm` command line
//! for [`hqmm_core`].

pub mod cli;
pub mod convert;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod io;
pub mod model_file;
pub mod run_file;
pub mod splice;

pub use error::{Error, Result};
