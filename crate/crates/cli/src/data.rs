use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ballconv::shape::{load_shape, synth_classes, Dataset, LabeledShape, SynthConfig};

use crate::cli::DataArgs;
use crate::config::{pick, FileConfig};

pub const DEFAULT_K: usize = 4096;
const SHAPE_EXTENSIONS: [&str; 5] = ["off", "obj", "csv", "json", "xyz"];

/// Where a labelled dataset comes from.
#[derive(Debug, Clone)]
pub struct DataSpec {
    pub dir: Option<PathBuf>,
    pub test_fraction: f64,
    pub synth: SynthConfig,
    pub k_samples: usize,
}

impl DataSpec {
    pub fn resolve(args: &DataArgs, file: &FileConfig) -> Result<Self> {
        let defaults = SynthConfig::default();
        let spec = Self {
            dir: args.data.clone().or_else(|| file.data.clone()),
            test_fraction: pick(args.test_fraction, &file.test_fraction, 0.2),
            synth: SynthConfig {
                train_per_class: pick(args.train_per_class, &file.train_per_class, defaults.train_per_class),
                test_per_class: pick(args.test_per_class, &file.test_per_class, defaults.test_per_class),
                points: pick(args.points, &file.points, defaults.points),
                jitter: pick(args.jitter, &file.jitter, defaults.jitter),
            },
            k_samples: pick(args.k_samples, &file.k_samples, DEFAULT_K),
        };
        if !(0.0..1.0).contains(&spec.test_fraction) {
            bail!("--test-fraction must lie in [0, 1), got {}", spec.test_fraction);
        }
        Ok(spec)
    }

    pub fn load(&self, seed: u64) -> Result<Dataset> {
        match &self.dir {
            Some(dir) => load_directory(dir, self.test_fraction, self.k_samples, seed),
            None => Ok(synth_classes(seed, &self.synth)?),
        }
    }
}

fn is_shape_file(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| SHAPE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    out.sort();
    Ok(out)
}

fn load_directory(dir: &Path, test_fraction: f64, k: usize, seed: u64) -> Result<Dataset> {
    let class_dirs: Vec<PathBuf> = sorted_entries(dir)?.into_iter().filter(|p| p.is_dir()).collect();
    if class_dirs.is_empty() {
        bail!("{} has no class subdirectories", dir.display());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Dataset { class_names: Vec::new(), train: Vec::new(), test: Vec::new() };
    for (label, class_dir) in class_dirs.iter().enumerate() {
        let name = class_dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let mut files: Vec<PathBuf> = sorted_entries(class_dir)?.into_iter().filter(|p| is_shape_file(p)).collect();
        if files.is_empty() {
            bail!("class directory {} has no shape files", class_dir.display());
        }
        files.shuffle(&mut rng);
        let n_test = ((test_fraction * files.len() as f64).round() as usize).min(files.len() - 1);
        for (i, path) in files.iter().enumerate() {
            let samples = load_shape(path, k, &mut rng).with_context(|| format!("loading {}", path.display()))?;
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let shape = LabeledShape { id: format!("{name}/{stem}"), label, samples };
            if i < n_test {
                data.test.push(shape);
            } else {
                data.train.push(shape);
            }
        }
        data.class_names.push(name);
    }
    Ok(data)
}

/// Label of a loose shape file: the name of its parent directory.
pub fn parent_label(path: &Path) -> String {
    path.parent().and_then(|p| p.file_name()).and_then(|n| n.to_str()).unwrap_or("").to_string()
}
