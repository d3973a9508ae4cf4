//! Merges command-line flags with an optional settings file and records every
//! resolved value for the run manifest.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use crate::failure::Failure;

#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    source: Option<PathBuf>,
    used: RefCell<BTreeSet<String>>,
    resolved: RefCell<BTreeMap<String, Value>>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

fn parse_key_values(text: &str, path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        if out.insert(normalize(k), v.trim().to_string()).is_some() {
            return Err(Failure::usage(format!("{}:{}: duplicate key {}", path.display(), i + 1, k.trim())));
        }
    }
    Ok(out)
}

fn parse_json(text: &str, path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Failure::usage(format!("{}: invalid JSON: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(Failure::usage(format!("{}: expected a JSON object", path.display())));
    };
    map.into_iter()
        .map(|(k, v)| {
            let s = match v {
                Value::String(s) => s,
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => b.to_string(),
                other => {
                    return Err(Failure::usage(format!(
                        "{}: key {k} must be a string, number or boolean, got {other}",
                        path.display()
                    )))
                }
            };
            Ok((normalize(&k), s))
        })
        .collect()
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        let file =
            if text.trim_start().starts_with('{') { parse_json(&text, path)? } else { parse_key_values(&text, path)? };
        Ok(Self { file, source: Some(path.to_path_buf()), ..Self::default() })
    }

    fn file_value<T>(&self, key: &str) -> Result<Option<T>, Failure>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.used.borrow_mut().insert(key.to_string());
        let Some(raw) = self.file.get(key) else {
            return Ok(None);
        };
        raw.parse::<T>().map(Some).map_err(|e| {
            let src = self.source.as_deref().map(|p| p.display().to_string()).unwrap_or_default();
            Failure::usage(format!("{src}: bad value {raw:?} for {key}: {e}"))
        })
    }

    fn record<T: Serialize>(&self, key: &str, value: &T) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.resolved.borrow_mut().insert(key.to_string(), v);
    }

    /// Flag, else settings file, else `None`.
    pub fn opt<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, Failure>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        let file_value = self.file_value(key)?;
        let v = flag.or(file_value);
        self.record(key, &v);
        Ok(v)
    }

    /// Flag, else settings file, else `default`.
    pub fn get<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, Failure>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        let file_value = self.file_value(key)?;
        let v = flag.or(file_value).unwrap_or(default);
        self.record(key, &v);
        Ok(v)
    }

    /// Like [`opt`](Self::opt) but missing is a usage error.
    pub fn require<T>(&self, key: &str, flag: Option<T>) -> Result<T, Failure>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        self.opt(key, flag)?.ok_or_else(|| Failure::usage(format!("--{key} is required (flag or config key)")))
    }

    /// A boolean switch: set if the flag is present or the file says true.
    pub fn switch(&self, key: &str, flag: bool) -> Result<bool, Failure> {
        let v = flag || self.file_value::<bool>(key)?.unwrap_or(false);
        self.record(key, &v);
        Ok(v)
    }

    /// Records a derived value that did not come from a flag.
    pub fn note<T: Serialize>(&self, key: &str, value: &T) {
        self.record(key, value);
    }

    /// Rejects settings-file keys that the command never asked for.
    pub fn finish(&self) -> Result<(), Failure> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self.file.keys().filter(|k| !used.contains(*k)).map(String::as_str).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Failure::usage(format!("unknown config keys: {}", unknown.join(", "))))
        }
    }

    pub fn resolved(&self) -> BTreeMap<String, Value> {
        self.resolved.borrow().clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn flags_override_file_values() {
        let f = write("# comment\nlr = 0.01\nbatch_size=32\n");
        let s = Settings::load(Some(f.path())).unwrap();
        assert_eq!(s.get("lr", Some(0.5), 0.0005).unwrap(), 0.5);
        assert_eq!(s.get("batch-size", None, 256usize).unwrap(), 32);
        assert_eq!(s.get("margin", None, 1.0).unwrap(), 1.0);
        s.finish().unwrap();
    }

    #[test]
    fn json_objects_are_accepted() {
        let f = write(r#"{"dim": 20, "freeze_literals": true, "train": "a.txt"}"#);
        let s = Settings::load(Some(f.path())).unwrap();
        assert_eq!(s.get("dim", None, 50usize).unwrap(), 20);
        assert!(s.switch("freeze-literals", false).unwrap());
        assert_eq!(s.opt::<PathBuf>("train", None).unwrap(), Some(PathBuf::from("a.txt")));
        assert_eq!(s.resolved()["dim"], serde_json::json!(20));
    }

    #[test]
    fn unknown_and_malformed_keys_are_usage_errors() {
        let f = write("lr=0.1\nbogus=3\n");
        let s = Settings::load(Some(f.path())).unwrap();
        s.get("lr", None, 0.0).unwrap();
        assert!(s.finish().unwrap_err().to_string().contains("bogus"));

        let f = write("lr=fast\n");
        let s = Settings::load(Some(f.path())).unwrap();
        assert!(s.get("lr", None, 0.0).is_err());
        assert!(Settings::load(Some(write("just text\n").path())).is_err());
        assert!(Settings::load(Some(write(r#"{"a": [1]}"#).path())).is_err());
    }
}
