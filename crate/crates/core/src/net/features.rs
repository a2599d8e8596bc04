use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FeatureMode, PipelineConfig};
use crate::conv::spherical::fit_sh;
use crate::conv::{local_shell_samples, ShellDecomposition, ShellFrame};
use crate::error::Result;
use crate::moments::{real_to_complex, Alpha, MomentFitter, PinvConfig, SampleSet};
use crate::shape::LabeledShape;
use crate::symmetry::{symmetry_descriptor, Axis};

/// Constant per-shape inputs of the pipeline: one coefficient vector per slot
/// (`n_shells` shells, or a single block for the spherical and axial modes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFeatures {
    pub slots: Vec<Vec<f64>>,
}

pub fn extract_features(samples: &SampleSet, config: &PipelineConfig) -> Result<ShapeFeatures> {
    let pinv = PinvConfig { alpha: Alpha::Auto, iters: config.pinv_iters };
    let dim = config.coeff_dim();
    match config.mode {
        FeatureMode::Volumetric => {
            let shells = ShellDecomposition::new(config.n_shells)?;
            let fitter = MomentFitter::new(config.order, pinv);
            let slots = shells
                .assign(samples.points())
                .iter()
                .enumerate()
                .map(|(k, idx)| {
                    if idx.is_empty() {
                        return Ok(vec![0.0; dim]);
                    }
                    let shell = match config.frame {
                        ShellFrame::Local => local_shell_samples(samples, &shells, k, idx),
                        ShellFrame::Global => samples.subset(idx),
                    };
                    Ok(fitter.fit(&shell)?.into_coeffs())
                })
                .collect::<Result<_>>()?;
            Ok(ShapeFeatures { slots })
        }
        FeatureMode::Spherical => {
            let dirs: Vec<(f64, f64)> = samples.points().iter().map(|p| (p.theta, p.phi)).collect();
            let sh = fit_sh(&dirs, samples.values(), config.order, &pinv)?;
            Ok(ShapeFeatures { slots: vec![sh.to_real()] })
        }
        FeatureMode::AxialSymmetry => {
            let c = MomentFitter::new(config.order, pinv).fit(samples)?;
            let d = symmetry_descriptor(&real_to_complex(&c), &Axis::tetrahedral())?;
            Ok(ShapeFeatures { slots: vec![d] })
        }
    }
}

/// Features of many shapes, computed in parallel; the result does not depend on the thread count.
pub fn extract_dataset_features(samples: &[&SampleSet], config: &PipelineConfig) -> Result<Vec<ShapeFeatures>> {
    samples.par_iter().map(|s| extract_features(s, config)).collect()
}

/// Features paired with labels, in input order.
pub fn labeled_features(shapes: &[LabeledShape], config: &PipelineConfig) -> Result<Vec<(ShapeFeatures, usize)>> {
    let samples: Vec<&SampleSet> = shapes.iter().map(|s| &s.samples).collect();
    Ok(extract_dataset_features(&samples, config)?.into_iter().zip(shapes.iter().map(|s| s.label)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::{synth_shape, ShapeClass};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn feature_shapes_per_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = synth_shape(ShapeClass::Ellipsoid, 600, 0.02, &mut rng).unwrap();
        for mode in [FeatureMode::Volumetric, FeatureMode::Spherical, FeatureMode::AxialSymmetry] {
            let cfg = PipelineConfig { mode, ..Default::default() };
            let f = extract_features(&s, &cfg).unwrap();
            assert_eq!(f.slots.len(), cfg.slots_per_kernel());
            assert!(f.slots.iter().all(|v| v.len() == cfg.coeff_dim()));
        }
    }
}
