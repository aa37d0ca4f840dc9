//! Flat `key = value` experiment configuration. One file, no environment
//! lookups, `#` starts a comment. Unknown keys are rejected so typos cannot
//! silently change an experiment.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

const KNOWN_KEYS: &[&str] = &[
    "system",
    "coefficient",
    "amplitude",
    "offset",
    "depth",
    "start",
    "phases",
    "grid_n",
    "regularity",
    "regularity_p",
    "ladder",
    "mu",
    "c_cfl",
    "sample_times",
    "xi",
    "corpus_size",
    "eps_log2_min",
    "eps_log2_max",
    "seed",
    "trace_stride",
    "m",
];

fn is_entry_key(key: &str) -> bool {
    let Some(rest) = key.strip_prefix("entry_") else {
        return false;
    };
    let mut parts = rest.split('_');
    let ok = |p: Option<&str>| p.is_some_and(|s| !s.is_empty() && s.chars().all(|c| c.is_ascii_digit()));
    ok(parts.next()) && ok(parts.next()) && parts.next().is_none()
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) && !is_entry_key(&key) {
                return Err(ConfigError(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            map.insert(key, value.trim().to_string());
        }
        Ok(Self { map })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.map.get(key).map(|s| s.as_str()).unwrap_or(default)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) if v == "inf" => Ok(f64::INFINITY),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError(format!("key `{key}`: expected a number, got `{v}`"))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError(format!("key `{key}`: expected an integer, got `{v}`"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.u64_or(key, default as u64)? as usize)
    }

    pub fn u32_or(&self, key: &str, default: u32) -> Result<u32, ConfigError> {
        Ok(self.u64_or(key, default as u64)? as u32)
    }

    /// Comma-separated list of numbers.
    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.map.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| ConfigError(format!("key `{key}`: bad list element `{s}`")))
                })
                .collect(),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    /// "lo..hi" or comma list of integers.
    pub fn ladder_or(&self, default: std::ops::RangeInclusive<u32>) -> Result<Vec<u32>, ConfigError> {
        match self.map.get("ladder") {
            None => Ok(default.collect()),
            Some(v) => {
                if let Some((lo, hi)) = v.split_once("..") {
                    let lo: u32 = lo.trim().parse().map_err(|_| {
                        ConfigError(format!("ladder: bad lower bound `{lo}`"))
                    })?;
                    let hi: u32 = hi.trim().parse().map_err(|_| {
                        ConfigError(format!("ladder: bad upper bound `{hi}`"))
                    })?;
                    Ok((lo..=hi).collect())
                } else {
                    v.split(',')
                        .map(|s| {
                            s.trim().parse().map_err(|_| {
                                ConfigError(format!("ladder: bad element `{s}`"))
                            })
                        })
                        .collect()
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_comments_and_lists() {
        let cfg = Config::parse(
            "# comment\nsystem = wave\namplitude = 0.3 # inline\nladder = 6..9\nsample_times = 0.5, 1.0\n",
        )
        .unwrap();
        assert_eq!(cfg.str_or("system", "block"), "wave");
        assert_eq!(cfg.f64_or("amplitude", 0.0).unwrap(), 0.3);
        assert_eq!(cfg.ladder_or(1..=2).unwrap(), vec![6, 7, 8, 9]);
        assert_eq!(cfg.f64_list_or("sample_times", &[]).unwrap(), vec![0.5, 1.0]);
        assert_eq!(cfg.f64_or("regularity_p", f64::INFINITY).unwrap(), f64::INFINITY);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(Config::parse("sytem = wave\n").is_err());
        assert!(Config::parse("just words\n").is_err());
        assert!(Config::parse("amplitude = abc\n").unwrap().f64_or("amplitude", 1.0).is_err());
    }

    #[test]
    fn entry_keys_are_accepted() {
        let cfg = Config::parse("m = 2
entry_0_1 = constant:1
").unwrap();
        assert_eq!(cfg.get("entry_0_1"), Some("constant:1"));
        assert!(Config::parse("entry_x_1 = 0
").is_err());
    }

    #[test]
    fn inf_parses_as_infinity() {
        let cfg = Config::parse("regularity_p = inf\n").unwrap();
        assert!(cfg.f64_or("regularity_p", 2.0).unwrap().is_infinite());
    }
}
