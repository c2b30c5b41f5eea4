use std::fs;
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::ServiceError;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_READ_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_MAX_EXPANSION_TERMS: usize = 32;

/// Startup configuration. Text form is one `key = value` per line; `#`
/// starts a comment line. List keys take comma-separated values and may be
/// repeated.
///
/// ```text
/// bind = 127.0.0.1
/// port = 8080
/// crosswalks = tab1.tsv, lcsh.tsv
/// term_lists = a.terms
/// read_timeout_ms = 10000
/// max_expansion_terms = 32
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub bind: IpAddr,
    pub port: u16,
    /// TSV crosswalk files (snapshots work too), loaded in order.
    pub crosswalks: Vec<PathBuf>,
    /// Term-list files, loaded before the crosswalks.
    pub term_lists: Vec<PathBuf>,
    pub read_timeout: Duration,
    /// Upper bound on terms added per query leaf by `/expand`.
    pub max_expansion_terms: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: IpAddr::from([127, 0, 0, 1]),
            port: DEFAULT_PORT,
            crosswalks: Vec::new(),
            term_lists: Vec::new(),
            read_timeout: DEFAULT_READ_TIMEOUT,
            max_expansion_terms: DEFAULT_MAX_EXPANSION_TERMS,
        }
    }
}

impl ServiceConfig {
    /// Parses the key=value text form on top of the defaults. Does not
    /// validate; call [`ServiceConfig::validate`] once all overrides are in.
    pub fn parse(text: &str) -> Result<Self, ServiceError> {
        let mut config = ServiceConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| ServiceError::Config(format!("line {}: {msg}", idx + 1));
            let Some((key, value)) = line.split_once('=') else {
                return Err(bad(format!("expected key = value, got {line:?}")));
            };
            let (key, value) = (key.trim(), value.trim());
            config.set(key, value).map_err(bad)?;
        }
        Ok(config)
    }

    /// Reads a config file. Relative data paths are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        if let Some(base) = path.parent() {
            for p in config
                .crosswalks
                .iter_mut()
                .chain(config.term_lists.iter_mut())
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(config)
    }

    /// Applies one setting; used by the parser and for command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "bind" => {
                self.bind = value
                    .parse()
                    .map_err(|_| format!("bad bind address {value:?}"))?;
            }
            "port" => self.port = parse_number(key, value)?,
            "crosswalks" => self.crosswalks.extend(split_paths(value)),
            "term_lists" => self.term_lists.extend(split_paths(value)),
            "read_timeout_ms" => {
                self.read_timeout = Duration::from_millis(parse_number(key, value)?);
            }
            "max_expansion_terms" => self.max_expansion_terms = parse_number(key, value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.port == 0 {
            return Err(ServiceError::Config("port must be in 1..=65535".into()));
        }
        if self.crosswalks.is_empty() && self.term_lists.is_empty() {
            return Err(ServiceError::Config("no data paths configured".into()));
        }
        if self.read_timeout.is_zero() {
            return Err(ServiceError::Config(
                "read_timeout_ms must be positive".into(),
            ));
        }
        if self.max_expansion_terms == 0 {
            return Err(ServiceError::Config(
                "max_expansion_terms must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn parse_number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("bad value for {key}: {value:?}"))
}

fn split_paths(value: &str) -> impl Iterator<Item = PathBuf> + '_ {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(PathBuf::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let config = ServiceConfig::parse(
            "# komohe\nbind = 0.0.0.0\nport=9000\ncrosswalks = a.tsv, b.tsv\n\
             crosswalks = c.tsv\nterm_lists = x.terms\nread_timeout_ms = 250\nmax_expansion_terms = 4\n",
        )
        .unwrap();
        assert_eq!(config.bind, IpAddr::from([0, 0, 0, 0]));
        assert_eq!(config.port, 9000);
        assert_eq!(
            config.crosswalks,
            ["a.tsv", "b.tsv", "c.tsv"].map(PathBuf::from)
        );
        assert_eq!(config.term_lists, [PathBuf::from("x.terms")]);
        assert_eq!(config.read_timeout, Duration::from_millis(250));
        assert_eq!(config.max_expansion_terms, 4);
        config.validate().unwrap();
    }

    #[test]
    fn rejects_bad_lines() {
        for text in [
            "port = 70000",
            "port = x",
            "colour = blue",
            "just words",
            "bind = nowhere",
        ] {
            assert!(ServiceConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn validation() {
        let no_data = ServiceConfig::parse("port = 80").unwrap();
        assert!(no_data.validate().is_err());
        let port_zero = ServiceConfig::parse("port = 0\ncrosswalks = a.tsv").unwrap();
        assert!(port_zero.validate().is_err());
        let only_terms = ServiceConfig::parse("term_lists = a.terms").unwrap();
        only_terms.validate().unwrap();
    }

    #[test]
    fn relative_paths_follow_config_file() {
        let dir = std::env::temp_dir().join(format!("komohe-config-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("service.conf");
        fs::write(&path, "crosswalks = tab1.tsv, /abs/other.tsv\n").unwrap();
        let config = ServiceConfig::load(&path).unwrap();
        assert_eq!(
            config.crosswalks,
            [dir.join("tab1.tsv"), PathBuf::from("/abs/other.tsv")]
        );
        fs::remove_dir_all(&dir).unwrap();
    }
}
