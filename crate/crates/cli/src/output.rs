//! On-disk formats. Every file carries a format name, a version and the
//! provenance record of the run that produced it.
//!
//! - CSV files start with `# format: NAME/VERSION` and `# config: JSON`.
//! - JSON documents are `{"format", "version", "config", "data"}`.
//! - `flights.jsonl` starts with a header object, then one record per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use flight_core::flight::{FlightRecord, StepPolicy};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::Provenance;
use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

pub const CUBES: &str = "cubes.csv";
pub const LAYER_COUNTS: &str = "layer_counts.csv";
pub const HYPOTHESIS: &str = "hypothesis.json";
pub const FLIGHTS: &str = "flights.jsonl";
pub const SURVIVAL: &str = "survival.csv";
pub const FITS: &str = "fits.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const ORACLE: &str = "oracle.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub format: String,
    pub version: u32,
    pub config: Provenance,
    pub data: T,
}

/// First line of `flights.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordsHeader {
    pub format: String,
    pub version: u32,
    pub config: Provenance,
    /// Policy after defaults were filled in.
    pub policy: StepPolicy,
    pub r_omega: f64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}

fn config_json(config: &Provenance) -> String {
    serde_json::to_string(config).expect("provenance serializes")
}

/// CSV body prefixed with the format and config comment lines.
pub fn csv_with_header(format: &str, config: &Provenance, body: &str) -> String {
    format!("# format: {format}/{FORMAT_VERSION}\n# config: {}\n{body}", config_json(config))
}

pub fn write_document<T: Serialize>(
    dir: &Path,
    name: &str,
    format: &str,
    config: &Provenance,
    data: T,
) -> Result<PathBuf, CliError> {
    let doc = Document { format: format.to_string(), version: FORMAT_VERSION, config: config.clone(), data };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Format(e.to_string()))?;
    text.push('\n');
    write_text(dir, name, &text)
}

fn write_line<T: Serialize>(out: &mut impl Write, value: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")
}

pub fn write_records<const D: usize>(
    dir: &Path,
    header: &RecordsHeader,
    records: &[FlightRecord<D>],
) -> Result<PathBuf, CliError> {
    let path = dir.join(FLIGHTS);
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut out = BufWriter::new(file);
    write_line(&mut out, header).map_err(io_err(&path))?;
    for r in records {
        write_line(&mut out, r).map_err(io_err(&path))?;
    }
    out.flush().map_err(io_err(&path))?;
    Ok(path)
}

/// Reads only the header line of a records file.
pub fn read_records_header(path: &Path) -> Result<RecordsHeader, CliError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).map_err(io_err(path))?;
    parse_header(path, &first)
}

fn parse_header(path: &Path, line: &str) -> Result<RecordsHeader, CliError> {
    let header: RecordsHeader = serde_json::from_str(line)
        .map_err(|e| CliError::Format(format!("{}: bad header line: {e}", path.display())))?;
    if header.format != "flight-records" || header.version != FORMAT_VERSION {
        return Err(CliError::Format(format!(
            "{}: expected flight-records/{FORMAT_VERSION}, found {}/{}",
            path.display(),
            header.format,
            header.version
        )));
    }
    Ok(header)
}

pub fn read_records<const D: usize>(path: &Path) -> Result<(RecordsHeader, Vec<FlightRecord<D>>), CliError>
where
    FlightRecord<D>: DeserializeOwned,
{
    let file = File::open(path).map_err(io_err(path))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| CliError::Format(format!("{}: empty records file", path.display())))?
        .map_err(io_err(path))?;
    let header = parse_header(path, &first)?;
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line)
            .map_err(|e| CliError::Format(format!("{}:{}: bad record: {e}", path.display(), i + 2)))?;
        records.push(r);
    }
    Ok((header, records))
}
