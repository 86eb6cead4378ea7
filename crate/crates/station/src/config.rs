//! Service configuration.
//!
//! ```toml
//! [server]
//! bind = "127.0.0.1"
//! port = 8080
//! time_scale = 1.0
//! scenario = "scenarios/gcs.toml"
//! ```
//!
//! `ASV_GCS_PORT` and `ASV_TIME_SCALE` override the file; command-line
//! flags override both.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    pub port: u16,
    /// Simulated seconds per wall-clock second; unset uses the scenario's.
    pub time_scale: Option<f64>,
    pub scenario: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: "127.0.0.1".into(),
            port: 8080,
            time_scale: None,
            scenario: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub server: ServerConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("{var}: {message}")]
    Env { var: &'static str, message: String },
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Reads `path` (relative scenario paths resolve against its directory).
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let file_err = |message: String| ConfigError::File {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        let mut cfg = Config::parse(&text).map_err(file_err)?;
        if let (Some(s), Some(dir)) = (cfg.server.scenario.as_mut(), path.parent()) {
            if s.is_relative() {
                *s = dir.join(&*s);
            }
        }
        Ok(cfg)
    }

    /// Applies environment overrides through `get` (normally `std::env::var`).
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(p) = get("ASV_GCS_PORT") {
            self.server.port = p.trim().parse().map_err(|_| ConfigError::Env {
                var: "ASV_GCS_PORT",
                message: format!("not a port number: {p}"),
            })?;
        }
        if let Some(t) = get("ASV_TIME_SCALE") {
            let v: f64 = t.trim().parse().map_err(|_| ConfigError::Env {
                var: "ASV_TIME_SCALE",
                message: format!("not a number: {t}"),
            })?;
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::Env {
                    var: "ASV_TIME_SCALE",
                    message: "must be positive".into(),
                });
            }
            self.server.time_scale = Some(v);
        }
        Ok(())
    }
}
