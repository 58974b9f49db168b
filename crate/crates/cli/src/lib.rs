//! Library side of the `rws` command-line tool.

pub mod commands;
pub mod config;
pub mod csv;
pub mod presets;

pub use commands::{run, verdicts, Outcome};
pub use config::{Command, Grid, Lemma, RunConfig};
pub use csv::{emit_csv, format_real, CsvWriter};
