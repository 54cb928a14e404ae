use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// A problem with the invocation itself rather than with the data. Reported
/// with exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

pub const KEYS: [&str; 10] = [
    "store",
    "store_format",
    "pairs",
    "lexicon",
    "templates",
    "prevalence",
    "threshold",
    "seed",
    "out",
    "format",
];

/// `key = value` settings. `#` starts a comment line; `store` may repeat.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, Vec<String>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<ConfigFile> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("config not found: {} ({e})", path.display())))?;
        ConfigFile::parse(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<ConfigFile, String> {
        let mut values: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(format!("line {}: unknown key '{key}'", i + 1));
            }
            let slot = values.entry(key.to_string()).or_default();
            if !slot.is_empty() && key != "store" {
                return Err(format!("line {}: '{key}' given twice", i + 1));
            }
            slot.push(value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values
            .get(key)
            .and_then(|v| v.first())
            .map(String::as_str)
    }

    pub fn get_all(&self, key: &str) -> &[String] {
        self.values.get(key).map_or(&[], Vec::as_slice)
    }
}

/// Flag value if given, else config value, parsed.
pub fn resolve<T: FromStr>(
    flag: Option<T>,
    cfg: &ConfigFile,
    key: &str,
) -> anyhow::Result<Option<T>>
where
    T::Err: fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    cfg.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|e| config_error(format!("invalid {key} '{v}': {e}")))
        })
        .transpose()
}

pub fn resolve_paths(flag: &[PathBuf], cfg: &ConfigFile, key: &str) -> Vec<PathBuf> {
    if !flag.is_empty() {
        return flag.to_vec();
    }
    cfg.get_all(key).iter().map(PathBuf::from).collect()
}

/// Fails with "`what` not found" when `path` is not an existing file.
pub fn require_file(what: &str, path: &Path) -> anyhow::Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(config_error(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c = ConfigFile::parse("# c\nstore = a.txt\nstore=b.txt\nseed = 7\n").unwrap();
        assert_eq!(c.get_all("store"), ["a.txt", "b.txt"]);
        assert_eq!(resolve::<u64>(None, &c, "seed").unwrap(), Some(7));
        assert_eq!(resolve(Some(9u64), &c, "seed").unwrap(), Some(9));
        assert!(ConfigFile::parse("colour = red").is_err());
        assert!(ConfigFile::parse("seed = 1\nseed = 2").is_err());
        assert!(ConfigFile::parse("seed").is_err());
        let bad = ConfigFile::parse("seed = x").unwrap();
        assert!(resolve::<u64>(None, &bad, "seed").is_err());
    }
}
