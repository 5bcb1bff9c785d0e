//! Header comment lines embedded in every output file.

use serde::{Deserialize, Serialize};

pub const TOOL_NAME: &str = "mfdim";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tool version, seed and configuration hash of a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
}

impl Provenance {
    pub fn new(seed: Option<u64>, config_hash: Option<String>) -> Self {
        Provenance { seed, config_hash }
    }

    /// `key=value` fields after the tool name and version.
    pub fn fields(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("tool".to_string(), TOOL_NAME.to_string()),
            ("version".to_string(), TOOL_VERSION.to_string()),
        ];
        out.push((
            "seed".to_string(),
            self.seed.map_or_else(|| "none".to_string(), |s| s.to_string()),
        ));
        out.push((
            "config".to_string(),
            self.config_hash.clone().unwrap_or_else(|| "none".to_string()),
        ));
        out
    }

    /// `# tool=mfdim version=… seed=… config=…` followed by `extra` pairs.
    pub fn comment_line(&self, extra: &[(&str, String)]) -> String {
        let mut parts: Vec<String> = self
            .fields()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        parts.extend(extra.iter().map(|(k, v)| format!("{k}={v}")));
        format!("# {}", parts.join(" "))
    }
}

/// Looks up `key=value` in a `#` comment line.
pub fn comment_field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.trim_start_matches('#')
        .split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comment_round_trip() {
        let p = Provenance::new(Some(7), Some("abc".into()));
        let line = p.comment_line(&[("resolution", "0.001".into())]);
        assert!(line.starts_with("# tool=mfdim version="));
        assert_eq!(comment_field(&line, "seed"), Some("7"));
        assert_eq!(comment_field(&line, "config"), Some("abc"));
        assert_eq!(comment_field(&line, "resolution"), Some("0.001"));
        assert_eq!(comment_field(&line, "missing"), None);
    }
}
