//! Hardware records as standalone JSON documents or rows of a CSV table
//! (`name,year,peak_flops,dram_bw,mem_capacity,interconnect_bw`).

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};
use crate::roofline::HardwareSpec;
use crate::scalar::Real;

const BUNDLED_HARDWARE: &str = include_str!("../data/hardware.csv");

/// Parses every row of a hardware CSV table.
pub fn parse_hardware_csv<T: Real + DeserializeOwned>(source: &str) -> Result<Vec<HardwareSpec<T>>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source.as_bytes());
    let mut out = Vec::new();
    for record in reader.deserialize::<HardwareSpec<T>>() {
        let hw = record.map_err(|e| csv_error(source, e))?;
        hw.validate()?;
        out.push(hw);
    }
    if out.is_empty() {
        return Err(Error::Parse("hardware table has no rows".into()));
    }
    Ok(out)
}

/// Accepts a JSON object, or a CSV table from which `device` (or the only
/// row) is selected.
pub fn load_hardware<T: Real + DeserializeOwned>(source: &str, device: Option<&str>) -> Result<HardwareSpec<T>> {
    let trimmed = source.trim_start();
    if trimmed.is_empty() {
        return Err(Error::Parse("empty hardware document".into()));
    }
    if trimmed.starts_with('{') {
        let hw: HardwareSpec<T> =
            serde_json::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
        hw.validate()?;
        return Ok(hw);
    }
    let rows = parse_hardware_csv(source)?;
    select_device(rows, device)
}

pub fn select_device<T>(rows: Vec<HardwareSpec<T>>, device: Option<&str>) -> Result<HardwareSpec<T>> {
    match device {
        Some(name) => rows
            .into_iter()
            .find(|hw| hw.name == name)
            .ok_or_else(|| Error::Validation(format!("no hardware row named `{name}`"))),
        None if rows.len() == 1 => Ok(rows.into_iter().next().expect("one row")),
        None => Err(Error::Validation(format!(
            "hardware table has {} rows; select one by name",
            rows.len()
        ))),
    }
}

/// Device table shipped with the crate.
pub fn bundled_hardware() -> Vec<HardwareSpec<f64>> {
    parse_hardware_csv(BUNDLED_HARDWARE).expect("bundled hardware table is valid")
}

/// 1-based line of the record starting at `byte`. The csv reader's own line
/// counter skips comment lines, and a record's offset may point at comment or
/// blank lines preceding it, so both are skipped here.
pub(crate) fn line_at(source: &str, byte: u64) -> u64 {
    let mut start = (byte as usize).min(source.len());
    let mut line = source.as_bytes()[..start].iter().filter(|&&c| c == b'\n').count() as u64 + 1;
    while let Some(rest) = source.get(start..) {
        let trimmed = rest.trim_start_matches([' ', '\t']);
        if !(trimmed.starts_with('#') || trimmed.starts_with('\n') || trimmed.starts_with("\r\n")) {
            break;
        }
        match rest.find('\n') {
            Some(nl) => {
                start += nl + 1;
                line += 1;
            }
            None => break,
        }
    }
    line
}

pub(crate) fn csv_error(source: &str, e: csv::Error) -> Error {
    let line = e.position().map(|p| line_at(source, p.byte())).unwrap_or(0);
    let message = match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => e.to_string(),
    };
    Error::Csv { line, message }
}
