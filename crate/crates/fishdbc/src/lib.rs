//! Data formats, generators and the command-line front end for `fishdbc-core`.

pub mod cli;
pub mod dataio;
pub mod formats;
pub mod generate;
