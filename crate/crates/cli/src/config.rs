//! `key = value` market config files.

use enn_core::islandia::MarketConfig;
use enn_core::{EnnError, Result};

/// Applies every `key = value` line on top of the defaults. `#` starts a
/// comment; blank lines are skipped.
pub fn parse_config(text: &str) -> Result<MarketConfig> {
    let mut c = MarketConfig::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| EnnError::InvalidConfig(format!("line {}: expected `key = value`", n + 1)))?;
        c.set(k.trim(), v.trim())
            .map_err(|e| EnnError::InvalidConfig(format!("line {}: {e}", n + 1)))?;
    }
    c.validate()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks() {
        let c = parse_config("# tuned\n\nmu = 0.002   # smaller\nwindow=7\n").unwrap();
        assert_eq!(c.mu, 0.002);
        assert_eq!(c.window, 7);
        assert_eq!(c.delta, MarketConfig::default().delta);
    }

    #[test]
    fn empty_file_is_default() {
        assert_eq!(parse_config("").unwrap(), MarketConfig::default());
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(parse_config("mu 0.1").is_err());
        assert!(parse_config("speed = 3").is_err());
        assert!(parse_config("mu = -1").is_err());
        assert!(parse_config("estimator = guess").is_err());
    }
}
