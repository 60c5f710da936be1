//! CSV files with a `#` provenance header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::CliError;

/// 17 significant digits; parses back to the same `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), fmt_num)
}

/// Comment block echoing the resolved configuration.
pub fn provenance(config: &RunConfig, material_label: &str) -> String {
    let mut out = format!(
        "# nanodimer {}\n# experiment: {}\n# material: {}\n# resolved configuration:\n",
        env!("CARGO_PKG_VERSION"),
        config.experiment,
        material_label
    );
    for line in config.emit().lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.to_path_buf(), source: std::io::Error::other(e) }
}

/// Writes `header` and `rows` below the provenance comment lines.
pub fn write_csv<I>(path: &Path, provenance: &str, header: &[String], rows: I) -> Result<PathBuf, CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(io_err(path))?;
    let mut buf = BufWriter::new(file);
    buf.write_all(provenance.as_bytes()).map_err(io_err(path))?;
    let mut writer = csv::Writer::from_writer(buf);
    writer.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        writer.write_record(&row).map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(path.to_path_buf())
}

/// Header row and records of a CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(csv_err(path))?;
    let header = reader.headers().map_err(csv_err(path))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(record.map_err(csv_err(path))?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

/// The part of an output file after the provenance comments.
pub fn data_section(text: &str) -> &str {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if !line.starts_with('#') {
            break;
        }
        offset += line.len();
    }
    &text[offset..]
}
