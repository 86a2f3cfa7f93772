//! Run manifests written next to every result file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Vec<(String, String)>,
    pub master_seed: Option<u64>,
    pub artifact_version: String,
    pub outputs: Vec<String>,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: Vec<(String, String)>, master_seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            config,
            master_seed,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            duration_secs: 0.0,
        }
    }

    /// Writes one copy beside each output, as `<file>.manifest.json`.
    pub fn write_beside(mut self, outputs: &[&Path], elapsed: Duration) -> std::io::Result<()> {
        self.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
        self.duration_secs = elapsed.as_secs_f64();
        let body = serde_json::to_string_pretty(&self).map_err(std::io::Error::other)?;
        for p in outputs {
            std::fs::write(manifest_path(p), &body)?;
        }
        Ok(())
    }
}

pub fn manifest_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_name() {
        assert_eq!(manifest_path(Path::new("out/run.csv")), PathBuf::from("out/run.csv.manifest.json"));
    }

    #[test]
    fn one_copy_per_output() {
        let d = tempfile::tempdir().unwrap();
        let a = d.path().join("a.csv");
        let b = d.path().join("a.json");
        RunManifest::new("x", vec![("k".into(), "v".into())], Some(4))
            .write_beside(&[&a, &b], Duration::from_millis(1500))
            .unwrap();
        let ma = std::fs::read_to_string(manifest_path(&a)).unwrap();
        assert_eq!(ma, std::fs::read_to_string(manifest_path(&b)).unwrap());
        let v: serde_json::Value = serde_json::from_str(&ma).unwrap();
        assert_eq!(v["master_seed"], 4);
        assert_eq!(v["duration_secs"], 1.5);
        assert_eq!(v["outputs"].as_array().unwrap().len(), 2);
    }
}
