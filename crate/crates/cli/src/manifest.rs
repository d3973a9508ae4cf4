use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::failure::Failure;
use crate::settings::Settings;

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Serialize)]
struct Input {
    path: String,
    sha256: String,
}

/// What a run consumed and produced. Contains no timestamps, so two runs with
/// the same settings and inputs write the same manifest.
#[derive(Debug, Serialize)]
pub struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    settings: BTreeMap<String, Value>,
    inputs: Vec<Input>,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    extra: BTreeMap<String, Value>,
}

impl Manifest {
    pub fn new(command: &'static str, settings: &Settings) -> Self {
        Self {
            tool: "kgjoint",
            version: VERSION,
            command,
            settings: settings.resolved(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), Failure> {
        self.inputs.push(Input { path: path.display().to_string(), sha256: kgjoint::data::file_sha256(path)? });
        Ok(())
    }

    pub fn inputs<'a>(&mut self, paths: impl IntoIterator<Item = &'a PathBuf>) -> Result<(), Failure> {
        paths.into_iter().try_for_each(|p| self.input(p))
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn extra(&mut self, key: &str, value: impl Serialize) {
        self.extra.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn write(&self, path: &Path) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| kgjoint::Error::io(path, e))?;
        Ok(())
    }
}

/// `model.ckpt` → `model.ckpt.manifest.json`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
