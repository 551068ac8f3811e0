//! Flat `key = value` text files.
//!
//! Blank lines and lines starting with `#` are ignored, as is anything after
//! a `#` on a value line. Keys are case-sensitive. A [`KvReader`] pulls typed
//! values out of a parsed file and collects every problem it meets, so a
//! caller can report all bad keys at once.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::ConfigError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (String, usize)>,
    source: Option<PathBuf>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut errors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                errors.push(format!("line {line_no}: expected 'key = value', got '{line}'"));
                continue;
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                errors.push(format!("line {line_no}: missing key"));
                continue;
            }
            if entries.insert(k.to_string(), (v.to_string(), line_no)).is_some() {
                errors.push(format!("line {line_no}: duplicate key '{k}'"));
            }
        }
        if errors.is_empty() {
            Ok(Self { entries, source: None })
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))?;
        let mut kv = Self::parse(&text).map_err(|e| prefix(e, path))?;
        kv.source = Some(path.to_path_buf());
        Ok(kv)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let line = self.entries.get(key).map(|e| e.1).unwrap_or(0);
        self.entries.insert(key.to_string(), (value.to_string(), line));
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|k| k.as_str())
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    /// Resolve a path value relative to the directory of the file it came from.
    pub fn resolve(&self, value: &str) -> PathBuf {
        let p = Path::new(value);
        match (&self.source, p.is_absolute()) {
            (Some(src), false) => src.parent().map(|d| d.join(p)).unwrap_or_else(|| p.to_path_buf()),
            _ => p.to_path_buf(),
        }
    }

    /// Entries whose key starts with `prefix.`, with the prefix stripped.
    pub fn section(&self, prefix: &str) -> KeyValues {
        let dotted = format!("{prefix}.");
        let entries = self
            .entries
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(&dotted).map(|s| (s.to_string(), v.clone())))
            .collect();
        KeyValues {
            entries,
            source: self.source.clone(),
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map(|e| e.1).unwrap_or(0)
    }
}

fn prefix(e: ConfigError, path: &Path) -> ConfigError {
    match e {
        ConfigError::Invalid(v) => ConfigError::Invalid(v.into_iter().map(|m| format!("{}: {m}", path.display())).collect()),
        other => other,
    }
}

/// Typed accessor that remembers which keys were read and what went wrong.
pub struct KvReader<'a> {
    kv: &'a KeyValues,
    used: BTreeSet<String>,
    errors: Vec<String>,
}

impl<'a> KvReader<'a> {
    pub fn new(kv: &'a KeyValues) -> Self {
        Self {
            kv,
            used: BTreeSet::new(),
            errors: Vec::new(),
        }
    }

    fn parsed<T: FromStr>(&mut self, key: &str) -> Option<T> {
        self.used.insert(key.to_string());
        let raw = self.kv.get(key)?;
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                let line = self.kv.line_of(key);
                self.errors.push(format!("{key} (line {line}): cannot parse '{raw}'"));
                None
            }
        }
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> f64 {
        self.parsed(key).unwrap_or(default)
    }

    pub fn f64(&mut self, key: &str) -> f64 {
        if !self.kv.contains(key) {
            self.used.insert(key.to_string());
            self.errors.push(format!("{key}: missing required key"));
            return f64::NAN;
        }
        self.parsed(key).unwrap_or(f64::NAN)
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> usize {
        self.parsed(key).unwrap_or(default)
    }

    pub fn u64_or(&mut self, key: &str, default: u64) -> u64 {
        self.parsed(key).unwrap_or(default)
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> bool {
        self.parsed(key).unwrap_or(default)
    }

    pub fn string_or(&mut self, key: &str, default: &str) -> String {
        self.used.insert(key.to_string());
        self.kv.get(key).unwrap_or(default).to_string()
    }

    pub fn string(&mut self, key: &str) -> String {
        self.used.insert(key.to_string());
        match self.kv.get(key) {
            Some(v) => v.to_string(),
            None => {
                self.errors.push(format!("{key}: missing required key"));
                String::new()
            }
        }
    }

    /// Comma-separated list of numbers.
    pub fn f64_list_or(&mut self, key: &str, default: &[f64]) -> Vec<f64> {
        self.used.insert(key.to_string());
        let Some(raw) = self.kv.get(key) else {
            return default.to_vec();
        };
        let mut out = Vec::new();
        for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.parse::<f64>() {
                Ok(v) => out.push(v),
                Err(_) => {
                    let line = self.kv.line_of(key);
                    self.errors.push(format!("{key} (line {line}): cannot parse '{item}'"));
                }
            }
        }
        out
    }

    /// Value chosen from a fixed set of words.
    pub fn choice_or(&mut self, key: &str, options: &[&str], default: &str) -> String {
        let v = self.string_or(key, default);
        if !options.contains(&v.as_str()) {
            self.errors.push(format!("{key}: '{v}' is not one of {}", options.join(", ")));
        }
        v
    }

    /// Record a validation failure for `key` when `ok` is false.
    pub fn check(&mut self, ok: bool, key: &str, msg: &str) {
        if !ok {
            self.errors.push(format!("{key}: {msg}"));
        }
    }

    pub fn error(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    /// Mark keys as consumed without reading them (e.g. handled elsewhere).
    pub fn allow(&mut self, keys: &[&str]) {
        for k in keys {
            self.used.insert((*k).to_string());
        }
    }

    /// Mark every key under `prefix.` as consumed.
    pub fn allow_section(&mut self, prefix: &str) {
        let dotted = format!("{prefix}.");
        let keys: Vec<String> = self.kv.keys().filter(|k| k.starts_with(&dotted)).map(String::from).collect();
        self.used.extend(keys);
    }

    pub fn errors(&self) -> &[String] {
        &self.errors
    }

    /// Fail with every collected error plus one per unknown key.
    pub fn finish(mut self) -> Result<(), ConfigError> {
        let unknown: Vec<String> = self.kv.keys().filter(|k| !self.used.contains(*k)).map(String::from).collect();
        for k in unknown {
            let line = self.kv.line_of(&k);
            self.errors.push(format!("{k} (line {line}): unknown key"));
        }
        if self.errors.is_empty() {
            Ok(())
        } else {
            if let Some(src) = self.kv.source() {
                let s = src.display().to_string();
                self.errors = self.errors.into_iter().map(|e| format!("{s}: {e}")).collect();
            }
            Err(ConfigError::Invalid(self.errors))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let kv = KeyValues::parse("# header\n a = 1.5 \n\nb=two # trailing\n").unwrap();
        assert_eq!(kv.get("a"), Some("1.5"));
        assert_eq!(kv.get("b"), Some("two"));
        assert_eq!(kv.keys().count(), 2);
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        let err = KeyValues::parse("a = 1\na = 2\nnonsense\n").unwrap_err();
        let ConfigError::Invalid(msgs) = err else { panic!() };
        assert_eq!(msgs.len(), 2);
    }

    #[test]
    fn reader_lists_every_bad_key() {
        let kv = KeyValues::parse("x = abc\ny = 2\nstray = 1\n").unwrap();
        let mut r = KvReader::new(&kv);
        let _ = r.f64("x");
        let _ = r.f64("y");
        let _ = r.f64("z");
        let ConfigError::Invalid(msgs) = r.finish().unwrap_err() else { panic!() };
        assert_eq!(msgs.len(), 3, "{msgs:?}");
        assert!(msgs.iter().any(|m| m.starts_with("x")));
        assert!(msgs.iter().any(|m| m.starts_with("z")));
        assert!(msgs.iter().any(|m| m.starts_with("stray")));
    }

    #[test]
    fn section_strips_prefix() {
        let kv = KeyValues::parse("tire.Bx = 10\ntire.Cx = 1.6\nm = 900\n").unwrap();
        let t = kv.section("tire");
        assert_eq!(t.get("Bx"), Some("10"));
        assert!(!t.contains("m"));
    }
}
