use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::arraysim::TransducerArray;
use crate::error::{Error, Result};

/// Plain-text `key = value` metadata, one pair per line, keys sorted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sidecar {
    entries: BTreeMap<String, String>,
}

impl Sidecar {
    pub fn for_array(array: &TransducerArray) -> Self {
        let mut s = Self::default();
        s.set("n_elements", array.n_elements);
        s.set("pitch", array.pitch);
        s.set("center_frequency", array.center_frequency);
        s.set("sampling_frequency", array.sampling_frequency);
        s.set("sound_speed", array.sound_speed);
        s
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_parsed<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Format(format!("sidecar lacks key '{key}'")))?;
        raw.parse()
            .map_err(|_| Error::Format(format!("sidecar key '{key}' has bad value '{raw}'")))
    }

    pub fn extend(&mut self, other: &Sidecar) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn array(&self) -> Result<TransducerArray> {
        super::binary::array_from(self)
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {}: expected key = value", n + 1)))?;
            s.entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
