use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Bad config file, bad `--set` override, or an invalid value.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

/// The merged configuration of one invocation.
pub struct Loaded {
    pub table: toml::Table,
    /// Directory that relative paths in the file resolve against.
    pub root: PathBuf,
    origin: String,
    text: Option<String>,
}

impl Loaded {
    /// Reads `path` (if any) and applies `key.path=value` overrides in order.
    pub fn new(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let (text, origin, root) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?;
                let root = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (text, p.display().to_string(), root)
            }
            None => (String::new(), "<no config file>".to_string(), PathBuf::new()),
        };
        let mut table: toml::Table = text.parse().map_err(|e| ConfigError(format!("{origin}: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let text = if overrides.is_empty() { Some(text) } else { None };
        Ok(Self { table, root, origin, text })
    }

    /// Deserializes the merged table. Without overrides, errors cite lines of
    /// the original file.
    pub fn parse<T: DeserializeOwned>(&self) -> Result<T, ConfigError> {
        let (text, origin) = self.source()?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("{origin}: {e}")))
    }

    /// Text to parse and its name for error messages.
    pub fn source(&self) -> Result<(String, String), ConfigError> {
        match &self.text {
            Some(text) => Ok((text.clone(), self.origin.clone())),
            None => {
                let merged = toml::to_string(&self.table).map_err(|e| ConfigError(e.to_string()))?;
                Ok((merged, format!("{} (after --set overrides)", self.origin)))
            }
        }
    }

    /// Resolves a path from the config against the config file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_relative() {
            self.root.join(p)
        } else {
            p.to_path_buf()
        }
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError(format!("--set {spec}: expected key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError(format!("--set {spec}: malformed key")));
    }
    // Anything that is not a TOML literal is taken as a bare string.
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| ConfigError(format!("--set {spec}: `{part}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Writes `config.toml` (the effective config) and `invocation.json`
/// (tool version, subcommand, config hash, seeds) into `out_dir`.
pub fn write_provenance<C: Serialize>(out_dir: &Path, subcommand: &str, cfg: &C, seeds: &[(&str, u64)]) -> anyhow::Result<()> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let text = toml::to_string(cfg).context("serializing effective config")?;
    std::fs::write(out_dir.join("config.toml"), &text)?;
    let seeds: serde_json::Map<String, serde_json::Value> = seeds.iter().map(|(k, v)| (k.to_string(), (*v).into())).collect();
    let doc = serde_json::json!({
        "tool": "seganforge",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": subcommand,
        "config_sha256": hex::encode(Sha256::digest(text.as_bytes())),
        "seeds": seeds,
    });
    std::fs::write(out_dir.join("invocation.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}
