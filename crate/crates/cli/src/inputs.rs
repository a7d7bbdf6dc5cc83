//! Resolution of model, hardware and trend inputs from paths or built-in
//! names. A name is only looked up when no file exists at that path.

use std::fs;
use std::path::Path;

use memwall::hardware_file::{bundled_hardware, load_hardware};
use memwall::{HardwareSpec, TransformerConfig, TrendTable};

use crate::error::{CliError, CliResult};
use crate::report::Digest256;

fn read(path: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read `{path}`: {e}")))
}

pub fn model(arg: &str, digest: &mut Digest256) -> CliResult<TransformerConfig> {
    if Path::new(arg).exists() {
        let text = read(arg)?;
        digest.update("model-file", text.as_bytes());
        return memwall::load_config(&text)
            .map_err(|e| CliError::Invalid(format!("{arg}: {e}")));
    }
    match memwall::preset(arg) {
        Ok(config) => {
            digest.update("model-preset", arg.as_bytes());
            Ok(config)
        }
        Err(_) => Err(CliError::Io(format!(
            "model `{arg}` is neither an existing file nor a preset"
        ))),
    }
}

pub fn hardware(arg: &str, device: Option<&str>, digest: &mut Digest256) -> CliResult<HardwareSpec> {
    if Path::new(arg).exists() {
        let text = read(arg)?;
        digest.update("hardware-file", text.as_bytes());
        digest.update("device", device.unwrap_or("").as_bytes());
        return load_hardware(&text, device).map_err(|e| CliError::Invalid(format!("{arg}: {e}")));
    }
    match bundled_hardware().into_iter().find(|hw| hw.name == arg) {
        Some(hw) => {
            digest.update("hardware-bundled", arg.as_bytes());
            Ok(hw)
        }
        None => Err(CliError::Io(format!(
            "hardware `{arg}` is neither an existing file nor a bundled device"
        ))),
    }
}

pub fn trend_table(arg: Option<&str>, digest: &mut Digest256) -> CliResult<TrendTable> {
    match arg {
        Some(path) => {
            let text = read(path)?;
            digest.update("trend-file", text.as_bytes());
            TrendTable::parse(&text).map_err(|e| CliError::Invalid(format!("{path}: {e}")))
        }
        None => {
            digest.update("trend-bundled", memwall::trends::bundled_trends_csv().as_bytes());
            Ok(memwall::trends::bundled_trends())
        }
    }
}
