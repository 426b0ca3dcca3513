//! Run manifests: a flat text record of exactly how a simulation was
//! produced, carrying the resolved configuration and content hashes of the
//! emitted tables. Reruns with the same configuration must reproduce the
//! hashed bytes; timestamps are informational only.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::config::{parse_config, ConfigError};

pub const MANIFEST_NAME: &str = "run.manifest";

const MANIFEST_KEYS: &[&str] = &[
    "version",
    "subcommand",
    "manifold",
    "paths",
    "horizon",
    "dt",
    "seed",
    "r0",
    "reflect",
    "pole",
    "checkpoints",
    "workers",
    "schedule-n-min",
    "schedule-n-max",
    "passages-sha256",
    "suprema-sha256",
    "created-unix",
    "elapsed-ms",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub version: String,
    pub subcommand: String,
    pub manifold: String,
    pub paths: usize,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub r0: f64,
    pub reflect: Option<f64>,
    pub pole: String,
    pub checkpoints: usize,
    pub schedule_n_min: Option<u32>,
    pub schedule_n_max: Option<u32>,
    pub passages_sha256: String,
    pub suprema_sha256: String,
    pub created_unix: u64,
    pub elapsed_ms: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

impl RunManifest {
    pub fn now_unix() -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "subcommand = {}", self.subcommand);
        let _ = writeln!(s, "manifold = {}", self.manifold);
        let _ = writeln!(s, "paths = {}", self.paths);
        let _ = writeln!(s, "horizon = {}", self.horizon);
        let _ = writeln!(s, "dt = {}", self.dt);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "r0 = {}", self.r0);
        if let Some(r) = self.reflect {
            let _ = writeln!(s, "reflect = {r}");
        }
        let _ = writeln!(s, "pole = {}", self.pole);
        let _ = writeln!(s, "checkpoints = {}", self.checkpoints);
        if let Some(n) = self.schedule_n_min {
            let _ = writeln!(s, "schedule-n-min = {n}");
        }
        if let Some(n) = self.schedule_n_max {
            let _ = writeln!(s, "schedule-n-max = {n}");
        }
        let _ = writeln!(s, "passages-sha256 = {}", self.passages_sha256);
        let _ = writeln!(s, "suprema-sha256 = {}", self.suprema_sha256);
        let _ = writeln!(s, "created-unix = {}", self.created_unix);
        let _ = writeln!(s, "elapsed-ms = {}", self.elapsed_ms);
        s
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<std::path::PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        std::fs::write(&path, self.render())?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<RunManifest, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg = parse_config(&text, &path.display().to_string(), MANIFEST_KEYS)?;
        let need = |key: &str| -> Result<String, ConfigError> {
            cfg.get(key)
                .map(|s| s.to_string())
                .ok_or_else(|| ConfigError::MissingKey { key: key.to_string() })
        };
        Ok(RunManifest {
            version: need("version")?,
            subcommand: need("subcommand")?,
            manifold: need("manifold")?,
            paths: cfg.parsed("paths")?.ok_or(ConfigError::MissingKey { key: "paths".into() })?,
            horizon: cfg
                .parsed("horizon")?
                .ok_or(ConfigError::MissingKey { key: "horizon".into() })?,
            dt: cfg.parsed("dt")?.ok_or(ConfigError::MissingKey { key: "dt".into() })?,
            seed: cfg.parsed("seed")?.ok_or(ConfigError::MissingKey { key: "seed".into() })?,
            r0: cfg.parsed("r0")?.ok_or(ConfigError::MissingKey { key: "r0".into() })?,
            reflect: cfg.parsed("reflect")?,
            pole: need("pole")?,
            checkpoints: cfg
                .parsed("checkpoints")?
                .ok_or(ConfigError::MissingKey { key: "checkpoints".into() })?,
            schedule_n_min: cfg.parsed("schedule-n-min")?,
            schedule_n_max: cfg.parsed("schedule-n-max")?,
            passages_sha256: need("passages-sha256")?,
            suprema_sha256: need("suprema-sha256")?,
            created_unix: cfg.parsed("created-unix")?.unwrap_or(0),
            elapsed_ms: cfg.parsed("elapsed-ms")?.unwrap_or(0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunManifest {
        RunManifest {
            version: "0.1.0".into(),
            subcommand: "simulate".into(),
            manifold: "manifold:euclidean,n=2".into(),
            paths: 100,
            horizon: 10.0,
            dt: 0.01,
            seed: 7,
            r0: 1.0,
            reflect: None,
            pole: "reflect".into(),
            checkpoints: 48,
            schedule_n_min: Some(3),
            schedule_n_max: Some(4),
            passages_sha256: "ab".repeat(32),
            suprema_sha256: "cd".repeat(32),
            created_unix: 1700000000,
            elapsed_ms: 12,
        }
    }

    #[test]
    fn renders_and_reloads_losslessly() {
        let m = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = m.write(dir.path()).unwrap();
        let back = RunManifest::load(&path).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn optional_fields_survive_absence() {
        let mut m = sample();
        m.reflect = Some(2.5);
        m.schedule_n_min = None;
        m.schedule_n_max = None;
        let dir = tempfile::tempdir().unwrap();
        let path = m.write(dir.path()).unwrap();
        let back = RunManifest::load(&path).unwrap();
        assert_eq!(back.reflect, Some(2.5));
        assert_eq!(back.schedule_n_max, None);
    }

    #[test]
    fn hashing_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
