use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use tapkit::trace::{read_traces, TraceFile};

use crate::{CliError, CliResult};

pub fn prepare_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("--out {}: {e}", dir.display())))?;
    let meta = fs::metadata(dir).map_err(|e| CliError::Config(format!("--out {}: {e}", dir.display())))?;
    if meta.permissions().readonly() {
        return Err(CliError::Config(format!("--out {} is not writable", dir.display())));
    }
    Ok(())
}

pub fn write_output(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

pub fn open_input(path: &Path, flag: &str) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::Config(format!("{flag} {}: {e}", path.display())))
}

/// Reads and validates a trace file; validation failures name the line.
pub fn load_traces(path: &Path) -> CliResult<(TraceFile, Vec<String>)> {
    let file = open_input(path, "--input")?;
    let parsed = read_traces(BufReader::new(file))
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let notes = parsed
        .renormalized
        .iter()
        .map(|line| format!("{}: line {line}: attention renormalized to unit mass", path.display()))
        .collect();
    Ok((parsed, notes))
}

/// Shortest representation that parses back to the same value.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Serialises rows with the `csv` writer into memory.
pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> CliResult<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Config(format!("csv output: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Config(format!("csv output: {e}")))
}

/// Maps a library error, keeping insufficient data distinct.
pub fn core_error(e: tapkit::Error, otherwise: fn(String) -> CliError) -> CliError {
    match e {
        tapkit::Error::InsufficientData(m) => CliError::InsufficientData(m),
        other => otherwise(other.to_string()),
    }
}
