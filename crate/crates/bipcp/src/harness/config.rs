use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// `key = value` pairs; `#` starts a comment, blank lines are ignored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KvConfig(pub BTreeMap<String, String>);

pub fn parse_kv(text: &str) -> Result<KvConfig> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", i + 1)))?;
        let k = k.trim().replace('-', "_");
        if k.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", i + 1)));
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(KvConfig(map))
}

pub fn load_kv(path: &Path) -> Result<KvConfig> {
    parse_kv(&std::fs::read_to_string(path)?)
}

impl KvConfig {
    pub fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::Parse(format!("{key} = {v:?}: {e}")))
            })
            .transpose()
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<T>()
                            .map_err(|e| Error::Parse(format!("{key}: {t:?}: {e}")))
                    })
                    .collect()
            })
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_lists() {
        let c =
            parse_kv("# sweep\ngamma1 = 0.8\nt-max: 100 # horizon\n\nlambda = 0.3, 0.2\n").unwrap();
        assert_eq!(c.get::<f64>("gamma1").unwrap(), Some(0.8));
        assert_eq!(c.get::<f64>("t_max").unwrap(), Some(100.0));
        assert_eq!(c.get_list::<f64>("lambda").unwrap(), Some(vec![0.3, 0.2]));
        assert_eq!(c.get::<f64>("a").unwrap(), None);
        assert!(parse_kv("novalue\n").is_err());
        assert!(c.get::<u64>("gamma1").is_err());
    }
}
