//! Schema sidecars and CSV datasets.

use std::fs;
use std::io::Write;
use std::path::Path;

use fale_core::{Dataset, ErrorKind, Schema};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn parse_schema(text: &str) -> Result<Schema, String> {
    let schema: Schema = serde_json::from_str(text).map_err(|e| e.to_string())?;
    schema.validate().map_err(|e| e.to_string())?;
    Ok(schema)
}

pub fn load_schema(path: &Path) -> Result<Schema> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, ErrorKind::Config, e))?;
    parse_schema(&text).map_err(|m| Error::format(path, ErrorKind::Config, m))
}

pub fn save_schema(path: &Path, schema: &Schema) -> Result<()> {
    let mut text = serde_json::to_string_pretty(schema).expect("schema serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, ErrorKind::Data, e))
}

/// Parses RFC 4180 CSV with a header row. Columns may appear in any order.
pub fn read_csv<R: std::io::Read>(reader: R, schema: Schema) -> Result<Dataset, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = match rdr.headers() {
        Ok(h) => h.iter().map(str::to_owned).collect(),
        Err(e) => return Err(e.to_string()),
    };
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let records = rdr
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let records: Vec<Vec<&str>> = records.iter().map(|r| r.iter().collect()).collect();
    Dataset::from_text_records(schema, &header_refs, records).map_err(|e| e.to_string())
}

pub fn load_csv(path: &Path, schema: Schema) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, ErrorKind::Data, e))?;
    read_csv(std::io::BufReader::new(file), schema)
        .map_err(|m| Error::format(path, ErrorKind::Data, m))
}

/// Writes the dataset in schema order. Numbers use their shortest
/// round-trip form, so reading the file back yields an identical dataset.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ds.schema().features.iter().map(|f| f.name.as_str()))?;
    for row in ds.rows() {
        w.write_record(row.values.iter().map(|v| v.to_string()))?;
    }
    w.flush()
}

pub fn save_csv(path: &Path, ds: &Dataset) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, ErrorKind::Data, e))?;
    write_csv(ds, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, ErrorKind::Data, e))
}

/// `sha256:` followed by the hex digest of `bytes`.
pub fn fingerprint(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

pub fn fingerprint_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, ErrorKind::Data, e))?;
    Ok(fingerprint(&bytes))
}
