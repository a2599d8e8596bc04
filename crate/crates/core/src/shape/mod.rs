//! Shape ingestion: meshes and point clouds, unit-ball normalization, surface sampling
//! and synthetic fixtures.

mod mesh;
mod normalize;
mod pointcloud;
mod synth;

pub use mesh::{load_mesh, load_obj, load_off, parse_obj, parse_off, sample_surface, TriangleMesh};
pub use normalize::{invert_normalization, normalize_to_ball, surface_values, NormalizationRecord};
pub use pointcloud::{load_point_cloud, parse_point_cloud_csv, parse_point_cloud_json, PointCloud};
pub use synth::{
    synth_bandlimited, synth_classes, synth_shape, Dataset, LabeledShape, ShapeClass, SynthConfig, BANDLIMITED_SAMPLES,
};

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::moments::SampleSet;

/// Loads any supported shape file as surface samples of `f = r` in the unit ball.
///
/// Meshes (`.off`, `.obj`) are sampled with `k` area-weighted points; point clouds
/// (`.csv`, `.json`) are used as given, keeping per-point values when present.
pub fn load_shape<R: Rng + ?Sized>(path: &Path, k: usize, rng: &mut R) -> Result<SampleSet> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).unwrap_or_default();
    match ext.as_str() {
        "off" | "obj" => {
            let mesh = load_mesh(path)?;
            let points = sample_surface(&mesh, k, rng)?;
            let (ball, _) = normalize_to_ball(&points)?;
            Ok(surface_values(ball))
        }
        "csv" | "json" | "xyz" => {
            let cloud = load_point_cloud(path)?;
            let (ball, _) = normalize_to_ball(&cloud.points)?;
            match cloud.values {
                Some(values) => SampleSet::new(ball, values),
                None => Ok(surface_values(ball)),
            }
        }
        _ => Err(Error::Format(format!("unsupported shape file extension '{ext}'"))),
    }
}

/// Random subset keeping `round((1 - fraction) · K)` samples, in their original order.
pub fn drop_points<R: Rng + ?Sized>(samples: &SampleSet, fraction: f64, rng: &mut R) -> Result<SampleSet> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(format!("removal fraction must lie in [0, 1), got {fraction}")));
    }
    let n = samples.len();
    let keep = ((1.0 - fraction) * n as f64).round() as usize;
    let mut idx = rand::seq::index::sample(rng, n, keep).into_vec();
    idx.sort_unstable();
    Ok(samples.subset(&idx))
}
