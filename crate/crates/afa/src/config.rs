//! TOML configuration files, flag overrides and the provenance hash.

use std::fs;
use std::path::Path;

use afa_core::pipeline::PipelineConfig;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{AfaError, Result};

pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let cfg: PipelineConfig = toml::from_str(text).map_err(|e| AfaError::Config(e.to_string()))?;
    cfg.validate().map_err(|e| AfaError::Config(e.to_string()))?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = fs::read_to_string(path).map_err(|e| AfaError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| AfaError::Config(format!("{}: {e}", path.display())))
}

pub fn to_toml(cfg: &PipelineConfig) -> String {
    toml::to_string(cfg).expect("configuration always serializes")
}

/// Hex SHA-256 of the canonical JSON form.
pub fn config_hash(cfg: &PipelineConfig) -> String {
    let canonical = serde_json::to_vec(cfg).expect("configuration always serializes");
    Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
}

/// Applies `dotted.key=value` overrides; values are read as TOML and fall
/// back to plain strings.
pub fn apply_overrides(cfg: &PipelineConfig, overrides: &[String]) -> Result<PipelineConfig> {
    if overrides.is_empty() {
        return Ok(cfg.clone());
    }
    let mut root = Table::try_from(cfg).map_err(|e| AfaError::Config(e.to_string()))?;
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| AfaError::Config(format!("override `{o}` is not key=value")))?;
        let value = format!("v = {raw}")
            .parse::<Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_string()));
        let parts: Vec<&str> = key.trim().split('.').collect();
        let (last, path) = parts.split_last().expect("split yields one part");
        let mut table = &mut root;
        for p in path {
            table = table
                .entry(p.to_string())
                .or_insert_with(|| Value::Table(Table::new()))
                .as_table_mut()
                .ok_or_else(|| AfaError::Config(format!("`{p}` in `{key}` is not a table")))?;
        }
        table.insert(last.to_string(), value);
    }
    let cfg: PipelineConfig = root.try_into().map_err(|e: toml::de::Error| AfaError::Config(e.to_string()))?;
    cfg.validate().map_err(|e| AfaError::Config(e.to_string()))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use afa_core::fusion::AffinityMode;
    use afa_core::pipeline::{GraphMode, KtRange};

    #[test]
    fn round_trip_and_hash() {
        let cfg = PipelineConfig::default();
        let text = to_toml(&cfg);
        assert_eq!(parse_config(&text).unwrap(), cfg);
        let h = config_hash(&cfg);
        assert_eq!(h.len(), 64);
        assert_eq!(h, config_hash(&parse_config(&text).unwrap()));
        let other = PipelineConfig { seed: 1, ..cfg };
        assert_ne!(h, config_hash(&other));
    }

    #[test]
    fn partial_files_use_defaults() {
        let cfg = parse_config("seed = 7\ngraph_mode = \"adjacency\"\n[k_t]\nmin = 2\nmax = 5\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.graph_mode, GraphMode::Adjacency);
        assert_eq!(cfg.k_t, KtRange { min: 2, max: 5 });
        assert_eq!(cfg.psi, 3);
        assert!(matches!(parse_config("bogus = 1"), Err(AfaError::Config(_))));
        assert!(matches!(parse_config("alpha = 2.0"), Err(AfaError::Config(_))));
    }

    #[test]
    fn overrides() {
        let cfg = apply_overrides(
            &PipelineConfig::default(),
            &["k_t.max=12".into(), "node_mode=area".into(), "affinity={kind=\"gaussian\", sigma=20.0}".into()],
        )
        .unwrap();
        assert_eq!(cfg.k_t.max, 12);
        assert_eq!(cfg.affinity, AffinityMode::Gaussian { sigma: 20.0 });
        assert!(apply_overrides(&cfg, &["psi".into()]).is_err());
        assert!(apply_overrides(&cfg, &["psi=0".into()]).is_err());
    }
}
