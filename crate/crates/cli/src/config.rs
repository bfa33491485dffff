//! Flat key=value configuration files, flag overrides, and run manifests.
//!
//! Config files are plain text: one `key=value` per line, `#` comments and
//! blank lines ignored. Flags win over file values, file values win over
//! built-in defaults. The resolved configuration is written back out as a
//! manifest whose key=value body is itself a valid config file, so
//! re-running a manifest reproduces the run.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::time::{SystemTime, UNIX_EPOCH};

use selfmod_core::gates::CapRule;

use crate::CliError;

/// Ordered key=value map with provenance-free access helpers.
#[derive(Debug, Clone, Default)]
pub struct KvMap {
    entries: BTreeMap<String, String>,
}

impl KvMap {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(format!(
                    "line {}: expected key=value, found `{line}`",
                    lineno + 1
                )));
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn set<V: Display>(&mut self, key: &str, value: V) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn set_opt<V: Display>(&mut self, key: &str, value: &Option<V>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn merge(&mut self, other: &KvMap) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Reject keys outside the experiment's schema, naming the offender.
    pub fn check_known(&self, known: &[&str]) -> Result<(), CliError> {
        for key in self.keys() {
            if !known.contains(&key) {
                return Err(CliError::config(format!("unknown config key `{key}`")));
            }
        }
        Ok(())
    }

    pub fn require_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let raw = self
            .get(key)
            .ok_or_else(|| CliError::config(format!("missing config key `{key}`")))?;
        raw.parse::<T>()
            .map_err(|e| CliError::config(format!("bad value for `{key}`: {e}")))
    }

    /// key=value body, sorted by key.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

/// Seed lists are written either as a count `N` (seeds 0..N-1) or as a
/// comma-separated list.
pub fn parse_seeds(raw: &str) -> Result<Vec<u64>, CliError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(CliError::config("empty seed specification".to_string()));
    }
    if !raw.contains(',') {
        let n: u64 = raw
            .parse()
            .map_err(|e| CliError::config(format!("bad seed count `{raw}`: {e}")))?;
        if n == 0 {
            return Err(CliError::config("seed count must be >= 1".to_string()));
        }
        return Ok((0..n).collect());
    }
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|e| CliError::config(format!("bad seed `{s}`: {e}")))
        })
        .collect()
}

pub fn seeds_to_string(seeds: &[u64]) -> String {
    seeds
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

pub fn parse_sizes(raw: &str) -> Result<Vec<usize>, CliError> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| CliError::config(format!("bad size `{s}`: {e}")))
        })
        .collect()
}

pub fn sizes_to_string(sizes: &[usize]) -> String {
    sizes
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

pub fn parse_cap(raw: &str) -> Result<CapRule, CliError> {
    raw.parse::<CapRule>().map_err(CliError::config)
}

/// Manifest text: commented metadata header plus the resolved key=value
/// body. The body alone is a valid config file.
pub fn manifest_text(experiment: &str, resolved: &KvMap) -> String {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!(
        "# selfmod-gate run manifest\n# experiment: {experiment}\n# tool_version: {}\n# started_unix: {started}\n{}",
        env!("CARGO_PKG_VERSION"),
        resolved.to_text()
    )
}

pub fn manifest_finish_line() -> String {
    let finished = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# finished_unix: {finished}\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let kv = KvMap::parse("# header\n\nfoo=1\n bar = two \n").unwrap();
        assert_eq!(kv.get("foo"), Some("1"));
        assert_eq!(kv.get("bar"), Some("two"));
        assert!(KvMap::parse("not a pair").is_err());
    }

    #[test]
    fn unknown_keys_are_named() {
        let kv = KvMap::parse("mystery=1").unwrap();
        let err = kv.check_known(&["known"]).unwrap_err();
        assert!(err.message.contains("mystery"));
    }

    #[test]
    fn seed_specs() {
        assert_eq!(parse_seeds("3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("5,9").unwrap(), vec![5, 9]);
        assert!(parse_seeds("0").is_err());
        assert!(parse_seeds("a,b").is_err());
    }

    #[test]
    fn manifest_round_trips_as_config() {
        let mut kv = KvMap::new_with([("n_train", "150"), ("seeds", "0,1")]);
        let text = manifest_text("mh", &kv);
        let back = KvMap::parse(&text).unwrap();
        assert_eq!(back.get("n_train"), Some("150"));
        assert_eq!(back.get("seeds"), Some("0,1"));
        kv.set("n_train", 99);
        assert_eq!(kv.get("n_train"), Some("99"));
    }
}

#[cfg(test)]
impl KvMap {
    fn new_with<const N: usize>(pairs: [(&str, &str); N]) -> Self {
        let mut kv = Self::default();
        for (k, v) in pairs {
            kv.set(k, v);
        }
        kv
    }
}
