//! Append-only file of calibrated critical values.
//!
//! ```text
//! # rss-entropy critical-value store v1
//! test,variant,estimator,k,r,m,alpha,reps,value,stderr,config_hash
//! exp,kl1,h1,10,1,1,0.05,10000,0.6318391209,0.0131,3f2a9c0d11e4b7a5
//! ```
//!
//! Values keep full precision. Later lines override earlier ones with the
//! same key.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::gof::{CriticalKey, CriticalValue};

pub const STORE_HEADER: &str = "# rss-entropy critical-value store v1";
const COLUMNS: &str = "test,variant,estimator,k,r,m,alpha,reps,value,stderr,config_hash";

/// Environment variable naming the default store path.
pub const STORE_ENV: &str = "RSS_ENTROPY_STORE";

#[derive(Debug, Clone, PartialEq)]
pub struct StoreEntry {
    pub critical: CriticalValue,
    pub config_hash: String,
}

#[derive(Debug, Clone, Default)]
pub struct CriticalValueStore {
    path: Option<PathBuf>,
    entries: Vec<StoreEntry>,
}

fn same_key(a: &CriticalKey, b: &CriticalKey) -> bool {
    a.test == b.test
        && a.variant == b.variant
        && a.entropy == b.entropy
        && a.k == b.k
        && a.r == b.r
        && a.m == b.m
        && a.reps == b.reps
        && (a.alpha - b.alpha).abs() < 1e-12
}

fn parse_line(line_no: usize, line: &str) -> Result<StoreEntry> {
    let err = |msg: String| Error::Parse { line: line_no, msg };
    let f: Vec<&str> = line.split(',').map(str::trim).collect();
    if f.len() != 11 {
        return Err(err(format!("expected 11 fields, found {}", f.len())));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|_| err(format!("`{s}` is not an integer")));
    let real = |s: &str| s.parse::<f64>().map_err(|_| err(format!("`{s}` is not a number")));
    let key = CriticalKey {
        test: f[0].parse().map_err(|e: Error| err(e.to_string()))?,
        variant: f[1].parse().map_err(|e: Error| err(e.to_string()))?,
        entropy: f[2].parse().map_err(|e: Error| err(e.to_string()))?,
        k: int(f[3])?,
        r: int(f[4])?,
        m: int(f[5])?,
        alpha: real(f[6])?,
        reps: int(f[7])?,
    };
    Ok(StoreEntry {
        critical: CriticalValue { key, value: real(f[8])?, stderr: real(f[9])? },
        config_hash: f[10].to_string(),
    })
}

fn format_entry(e: &StoreEntry) -> String {
    let k = &e.critical.key;
    format!(
        "{},{},{},{},{},{},{:?},{},{:?},{:?},{}",
        k.test, k.variant, k.entropy, k.k, k.r, k.m, k.alpha, k.reps, e.critical.value, e.critical.stderr, e.config_hash
    )
}

impl CriticalValueStore {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, first)) if first.trim() == STORE_HEADER => {}
            _ => {
                return Err(Error::Parse { line: 1, msg: format!("missing store header `{STORE_HEADER}`") })
            }
        }
        let mut entries = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line == COLUMNS {
                continue;
            }
            entries.push(parse_line(i + 1, line)?);
        }
        Ok(CriticalValueStore { path: None, entries })
    }

    /// Loads the store at `path`; a missing file yields an empty store.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut store = if path.exists() {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            Self::parse(&text)?
        } else {
            CriticalValueStore::default()
        };
        store.path = Some(path.to_path_buf());
        Ok(store)
    }

    pub fn entries(&self) -> &[StoreEntry] {
        &self.entries
    }

    /// Exact-key lookup; the most recently appended match wins.
    pub fn lookup(&self, key: &CriticalKey) -> Option<&StoreEntry> {
        self.entries.iter().rev().find(|e| same_key(&e.critical.key, key))
    }

    /// Appends entries in memory and, for a file-backed store, on disk.
    pub fn append(&mut self, new: Vec<StoreEntry>) -> Result<()> {
        if let Some(path) = &self.path {
            let fresh = !path.exists() || fs::metadata(path)?.len() == 0;
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            let mut text = String::new();
            if fresh {
                text.push_str(STORE_HEADER);
                text.push('\n');
                text.push_str(COLUMNS);
                text.push('\n');
            }
            for e in &new {
                text.push_str(&format_entry(e));
                text.push('\n');
            }
            file.write_all(text.as_bytes())?;
        }
        self.entries.extend(new);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::Estimator;
    use crate::gof::{TestKind, Variant};

    fn key(reps: usize, entropy: Estimator) -> CriticalKey {
        CriticalKey {
            test: TestKind::Normality,
            variant: Variant::Kl1,
            entropy,
            k: 10,
            r: 3,
            m: 5,
            alpha: 0.05,
            reps,
        }
    }

    #[test]
    fn append_and_lookup_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("crit.store");
        let mut store = CriticalValueStore::open(&path).unwrap();
        let value = 0.173_912_345_678_901_23;
        store
            .append(vec![StoreEntry {
                critical: CriticalValue { key: key(10_000, Estimator::RssPooledH1), value, stderr: 0.002 },
                config_hash: "abc".into(),
            }])
            .unwrap();
        let reopened = CriticalValueStore::open(&path).unwrap();
        let hit = reopened.lookup(&key(10_000, Estimator::RssPooledH1)).unwrap();
        assert_eq!(hit.critical.value, value);
        assert!(reopened.lookup(&key(5_000, Estimator::RssPooledH1)).is_none());
        assert!(reopened.lookup(&key(10_000, Estimator::RssPerCycleH2)).is_none());
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(STORE_HEADER));
    }

    #[test]
    fn later_entries_win() {
        let mut store = CriticalValueStore::default();
        let k = key(100, Estimator::RssPooledH1);
        for v in [1.0, 2.0] {
            store
                .append(vec![StoreEntry { critical: CriticalValue { key: k, value: v, stderr: 0.0 }, config_hash: "h".into() }])
                .unwrap();
        }
        assert_eq!(store.lookup(&k).unwrap().critical.value, 2.0);
    }

    #[test]
    fn rejects_missing_header_and_bad_lines() {
        assert!(CriticalValueStore::parse("exp,kl1,h1,10,1,1,0.05,100,0.6,0.01,h\n").is_err());
        let bad = format!("{STORE_HEADER}\n{COLUMNS}\nexp,kl1,h1,10,1,x,0.05,100,0.6,0.01,h\n");
        assert!(matches!(CriticalValueStore::parse(&bad), Err(Error::Parse { line: 3, .. })));
    }
}
