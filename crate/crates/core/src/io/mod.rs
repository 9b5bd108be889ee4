//! File formats: Rayleigh data, indicator volumes and JSON summaries.

mod data_file;
mod volume;

pub use data_file::{format_data, parse_data, read_data, write_data, DataFile};
pub use volume::{format_csv, format_vtk, parse_csv, parse_vtk};

use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
