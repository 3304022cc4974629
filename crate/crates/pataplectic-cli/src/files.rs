//! JSON input with field-path diagnostics, and report output.

use crate::Failure;
use pataplectic::models::{Model, ModelJson};
use pataplectic::observables::ObservableJson;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::path::Path;

pub const REPORT_FORMAT: &str = "1.0";

fn parse<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, Failure> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            Failure::Usage(format!("{origin}: {}", e.inner()))
        } else {
            Failure::Usage(format!("{origin}: field '{path}': {}", e.inner()))
        }
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

/// Inline JSON when the argument starts with `{`, otherwise a file path.
pub fn inline_or_file<T: DeserializeOwned>(arg: &str) -> Result<T, Failure> {
    if arg.trim_start().starts_with('{') {
        parse(arg, "inline JSON")
    } else {
        read_json(Path::new(arg))
    }
}

pub fn observable(arg: &str) -> Result<ObservableJson, Failure> {
    inline_or_file(arg)
}

pub fn load_model(path: &Path) -> Result<(ModelJson, Model), Failure> {
    let j: ModelJson = read_json(path)?;
    let m = Model::from_json(&j).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok((j, m))
}

/// Pretty JSON to the file, or to stdout.
pub fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
