use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sparcon::{InjectionConfig, TrainConfig};

/// One structured config drives every subcommand; the top-level seed is
/// propagated into every nested stage so a run is a pure function of
/// (config, seed, inputs).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub edges_path: PathBuf,
    pub attrs_path: PathBuf,
    #[serde(default)]
    pub labels_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub injection: InjectionConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg: RunConfig = serde_json::from_str(&text).context("parsing config JSON")?;
        cfg.set_seed(cfg.seed);
        Ok(cfg)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.injection.rng_seed = seed;
        self.train.seed = seed;
        self.train.sampler.rng_seed = seed;
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    /// FNV-1a over the canonical JSON encoding; embedded in metrics for
    /// provenance.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).unwrap_or_default();
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}
