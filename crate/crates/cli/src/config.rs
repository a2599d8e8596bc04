use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use crate::cli::{ConvKind, FeatureKind, Frame, Method};

/// Defaults read from a TOML file. Every key is optional and matches the long flag name
/// with `_` for `-`; a flag given on the command line always wins.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub n_order: Option<usize>,
    pub k_samples: Option<usize>,
    pub method: Option<Method>,
    pub alpha: Option<String>,
    pub iters: Option<usize>,
    pub frame: Option<Frame>,
    pub kernels: Option<usize>,
    pub shells: Option<usize>,
    pub conv: Option<ConvKind>,
    pub features: Option<FeatureKind>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub batch_size: Option<usize>,
    pub pinv_iters: Option<usize>,
    pub data: Option<PathBuf>,
    pub test_fraction: Option<f64>,
    pub train_per_class: Option<usize>,
    pub test_per_class: Option<usize>,
    pub points: Option<usize>,
    pub jitter: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flag, then config file, then built-in default.
pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>, default: T) -> T {
    flag.or_else(|| file.clone()).unwrap_or(default)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let cfg: FileConfig =
            toml::from_str("seed = 7\nn_order = 4\nmethod = \"quadrature\"\nconv = \"spherical\"").unwrap();
        assert_eq!(pick(Some(3), &cfg.seed, 0), 3);
        assert_eq!(pick(None, &cfg.seed, 0), 7);
        assert_eq!(pick(None, &cfg.epochs, 20), 20);
        assert_eq!(cfg.method, Some(Method::Quadrature));
        assert_eq!(cfg.conv, Some(ConvKind::Spherical));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("n_orders = 4").is_err());
    }
}
