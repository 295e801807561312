//! Configuration resolution: flags > environment (DISSIPATOR_*) > config
//! file (JSON) > built-in defaults.

use std::path::Path;

use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
                serde_json::from_str(&text)
                    .map_err(|e| format!("invalid config {}: {e}", p.display()))
            }
        }
    }
}

fn env_parsed<T: std::str::FromStr>(name: &str) -> Option<T> {
    std::env::var(name).ok().and_then(|v| v.parse().ok())
}

/// Highest-priority non-empty source wins.
pub fn resolve<T>(flag: Option<T>, env: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(env).or(file).unwrap_or(default)
}

pub fn resolve_seed(flag: Option<u64>, file: &FileConfig) -> u64 {
    resolve(flag, env_parsed("DISSIPATOR_SEED"), file.seed, 0)
}

pub fn resolve_jobs(flag: Option<usize>, file: &FileConfig) -> usize {
    let default = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    resolve(flag, env_parsed("DISSIPATOR_JOBS"), file.jobs, default).max(1)
}
