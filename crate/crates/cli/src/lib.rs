//! Config loading, presets and the run pipeline behind the `tdsmat` binary.

pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod presets;
pub mod validate;

pub use config::RunConfig;
pub use error::CliError;
