use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::ExperimentConfig;

/// Parse `key=value` lines (blank lines and `#` comments ignored, optional
/// surrounding quotes on values) and then apply `overrides` in order.
/// Returns the validated config and any duplicate-key warnings.
pub fn parse_config_text(text: &str, overrides: &[String]) -> Result<(ExperimentConfig, Vec<String>)> {
    let mut cfg = ExperimentConfig::default();
    let mut warnings = Vec::new();
    let mut seen_file: Vec<String> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = split_pair(line).ok_or_else(|| {
            Error::config(
                format!("line {}", lineno + 1),
                format!("expected key=value, got `{line}`"),
            )
        })?;
        if seen_file.iter().any(|k| k == key) {
            warnings.push(format!(
                "duplicate key `{key}` on line {}; last occurrence wins",
                lineno + 1
            ));
        } else {
            seen_file.push(key.to_string());
        }
        cfg.set(key, value)?;
    }
    let mut seen_override: Vec<String> = Vec::new();
    for ov in overrides {
        let (key, value) = split_pair(ov).ok_or_else(|| Error::config(ov.clone(), "override must be KEY=VALUE"))?;
        if seen_override.iter().any(|k| k == key) {
            warnings.push(format!("duplicate override `{key}`; last occurrence wins"));
        } else {
            seen_override.push(key.to_string());
        }
        cfg.set(key, value)?;
    }
    cfg.validate()?;
    Ok((cfg, warnings))
}

fn split_pair(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    let k = k.trim();
    let v = v.trim();
    let v = v.strip_prefix('"').and_then(|x| x.strip_suffix('"')).unwrap_or(v);
    if k.is_empty() {
        None
    } else {
        Some((k, v))
    }
}

/// Read the config file (when given), apply overrides, validate. Warnings
/// go to stderr.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = match path {
        Some(p) => {
            std::fs::read_to_string(p).map_err(|e| Error::config("--config", format!("{}: {e}", p.display())))?
        }
        None => String::new(),
    };
    let (cfg, warnings) = parse_config_text(&text, overrides)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}
