//! Builtin model persistence as JSON.

use std::fs;
use std::path::Path;

use fale_core::{BuiltinModel, ErrorKind};

use crate::error::{Error, Result};

pub fn to_json(model: &BuiltinModel) -> String {
    let mut s = serde_json::to_string_pretty(model).expect("model serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<BuiltinModel, String> {
    let model: BuiltinModel = serde_json::from_str(text).map_err(|e| e.to_string())?;
    model.validate().map_err(|e| e.to_string())?;
    Ok(model)
}

pub fn save_model(path: &Path, model: &BuiltinModel) -> Result<()> {
    fs::write(path, to_json(model)).map_err(|e| Error::io(path, ErrorKind::Data, e))
}

pub fn load_model(path: &Path) -> Result<BuiltinModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, ErrorKind::Config, e))?;
    from_json(&text).map_err(|m| Error::format(path, ErrorKind::Config, m))
}
