use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::ServiceError;

pub const DEFAULT_PORT: u16 = 8080;
pub const MAX_TEXT_CHARS: usize = 512;
pub const MAX_POEM_LINES: usize = 200;

/// Service settings, read from a TOML file and then overridden by
/// `METAPHOR_PORT`, `METAPHOR_ADAPTERS` and `METAPHOR_LOG_DIR`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    /// Adapter configuration file.
    pub adapters: PathBuf,
    /// Directory for the request log; no log when unset.
    pub log_dir: Option<PathBuf>,
    pub max_text_chars: usize,
    pub max_poem_lines: usize,
    /// Upper bound on requests doing adapter work at the same time.
    pub max_inflight: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            host: "127.0.0.1".into(),
            port: DEFAULT_PORT,
            adapters: PathBuf::from("adapters.toml"),
            log_dir: None,
            max_text_chars: MAX_TEXT_CHARS,
            max_poem_lines: MAX_POEM_LINES,
            max_inflight: 64,
        }
    }
}

impl ServiceConfig {
    /// Parses `text`; relative paths are resolved against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, ServiceError> {
        let mut cfg: ServiceConfig = toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))?;
        cfg.adapters = resolve(base_dir, &cfg.adapters);
        cfg.log_dir = cfg.log_dir.map(|d| resolve(base_dir, &d));
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the file at `path` (defaults when `None`) and applies the
    /// process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ServiceError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                ServiceConfig::from_toml(&text, p.parent().unwrap_or_else(|| Path::new(".")))?
            }
            None => ServiceConfig::default(),
        };
        cfg.apply_env(std::env::vars())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), ServiceError> {
        for (k, v) in vars {
            match k.as_str() {
                "METAPHOR_PORT" => {
                    self.port = v
                        .parse()
                        .map_err(|_| ServiceError::Config(format!("METAPHOR_PORT `{v}` is not a port")))?;
                }
                "METAPHOR_ADAPTERS" => self.adapters = PathBuf::from(v),
                "METAPHOR_LOG_DIR" => self.log_dir = Some(PathBuf::from(v)),
                _ => {}
            }
        }
        self.validate()
    }

    fn validate(&self) -> Result<(), ServiceError> {
        if self.max_text_chars == 0 || self.max_poem_lines == 0 || self.max_inflight == 0 {
            return Err(ServiceError::Config(
                "max_text_chars, max_poem_lines and max_inflight must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_env() {
        let mut cfg = ServiceConfig::from_toml("port = 9000\nadapters = \"a.toml\"\nlog_dir = \"logs\"", Path::new("/etc/m"))
            .unwrap();
        assert_eq!(cfg.port, 9000);
        assert_eq!(cfg.adapters, PathBuf::from("/etc/m/a.toml"));
        assert_eq!(cfg.log_dir, Some(PathBuf::from("/etc/m/logs")));
        cfg.apply_env([
            ("METAPHOR_PORT".to_string(), "9100".to_string()),
            ("METAPHOR_LOG_DIR".to_string(), "/tmp/x".to_string()),
            ("UNRELATED".to_string(), "1".to_string()),
        ])
        .unwrap();
        assert_eq!((cfg.port, cfg.log_dir), (9100, Some(PathBuf::from("/tmp/x"))));
        assert_eq!(cfg.max_text_chars, 512);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ServiceConfig::from_toml("bogus = 1", Path::new(".")).is_err());
        assert!(ServiceConfig::from_toml("max_inflight = 0", Path::new(".")).is_err());
        let mut cfg = ServiceConfig::default();
        assert!(cfg.apply_env([("METAPHOR_PORT".to_string(), "http".to_string())]).is_err());
    }
}
