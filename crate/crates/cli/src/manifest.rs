//! Run manifests: everything needed to resume from a training run, plus a
//! record of the settings that produced each output.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use graphflow::initial::InitialDistribution;
use graphflow::sampling::{NodeCountHistogram, SampleConfig};
use graphflow::training::TrainConfig;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DenoiserKind {
    Featurized,
    Oracle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelManifest {
    pub denoiser: DenoiserKind,
    /// Checkpoint file name, relative to the manifest's directory.
    pub checkpoint: Option<String>,
    /// Absolute path of the training dataset.
    pub dataset: PathBuf,
    pub p0: InitialDistribution,
    pub node_counts: NodeCountHistogram,
    pub train_config: TrainConfig,
    /// Merged configuration keys in `key = value` form.
    pub config_text: String,
    pub final_loss: Option<f64>,
    pub wall_time_s: f64,
}

impl ModelManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }

    pub fn checkpoint_path(&self, manifest_path: &Path) -> Result<PathBuf> {
        let Some(name) = &self.checkpoint else {
            bail!("manifest {} has no checkpoint", manifest_path.display());
        };
        Ok(manifest_path.parent().unwrap_or(Path::new(".")).join(name))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleManifest {
    pub model: PathBuf,
    pub sample_config: SampleConfig,
    pub n_samples: usize,
    pub config_text: String,
    pub wall_time_s: f64,
}

/// `samples.json` → `samples.manifest.json`.
pub fn sample_manifest_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "samples".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.manifest.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_manifest_sits_next_to_output() {
        assert_eq!(
            sample_manifest_path(Path::new("runs/a/samples.json")),
            PathBuf::from("runs/a/samples.manifest.json")
        );
        assert_eq!(sample_manifest_path(Path::new("out")), PathBuf::from("out.manifest.json"));
    }
}
