//! Synthetic fixtures: band-limited ball functions and a three-class shape dataset.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::normalize::{normalize_to_ball, surface_values};
use crate::error::Result;
use crate::geometry::{random_rotation, uniform_ball_points};
use crate::moments::{reconstruct, MomentLayout, MomentVector, SampleSet};

/// Samples drawn by [`synth_bandlimited`].
pub const BANDLIMITED_SAMPLES: usize = 8192;

/// Random band-limited function of the given order and its values at uniform ball samples.
pub fn synth_bandlimited(seed: u64, order: usize) -> Result<(MomentVector, SampleSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = MomentLayout::new(order);
    let mut coeffs: Vec<f64> = (0..layout.dim()).map(|_| rng.sample(StandardNormal)).collect();
    for i in layout.zonal_positions() {
        coeffs[layout.len() + i] = 0.0;
    }
    let c = MomentVector::from_coeffs(order, coeffs)?;
    let points = uniform_ball_points(&mut rng, BANDLIMITED_SAMPLES);
    let values = reconstruct(&c, &points)?;
    Ok((c, SampleSet::new(points, values)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeClass {
    Sphere,
    Ellipsoid,
    TwoLobe,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 3] = [ShapeClass::Sphere, ShapeClass::Ellipsoid, ShapeClass::TwoLobe];

    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::Sphere => "sphere",
            ShapeClass::Ellipsoid => "ellipsoid",
            ShapeClass::TwoLobe => "two_lobe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub points: usize,
    /// Standard deviation of the multiplicative radial jitter.
    pub jitter: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { train_per_class: 100, test_per_class: 30, points: 2048, jitter: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledShape {
    pub id: String,
    pub label: usize,
    pub samples: SampleSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub class_names: Vec<String>,
    pub train: Vec<LabeledShape>,
    pub test: Vec<LabeledShape>,
}

impl Dataset {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }
}

fn unit_direction<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        let n: f64 = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Surface samples of one randomly parameterized, rotated and jittered shape.
pub fn synth_shape<R: Rng + ?Sized>(class: ShapeClass, points: usize, jitter: f64, rng: &mut R) -> Result<SampleSet> {
    let raw: Vec<Vector3<f64>> = match class {
        ShapeClass::Sphere => (0..points).map(|_| unit_direction(rng)).collect(),
        ShapeClass::Ellipsoid => {
            let axes = Vector3::new(1.0, rng.random_range(0.65..0.85), rng.random_range(0.35..0.5));
            (0..points).map(|_| unit_direction(rng).component_mul(&axes)).collect()
        }
        ShapeClass::TwoLobe => {
            let radius = rng.random_range(0.48..0.52);
            let offset = rng.random_range(0.42..0.46);
            let centers = [Vector3::new(0.0, 0.0, offset), Vector3::new(0.0, 0.0, -offset)];
            let mut out = Vec::with_capacity(points);
            while out.len() < points {
                let which = rng.random_range(0..2);
                let p = centers[which] + unit_direction(rng) * radius;
                // keep only the outer surface of the union
                if (p - centers[1 - which]).norm() >= radius {
                    out.push(p);
                }
            }
            out
        }
    };
    let rotation = random_rotation(rng);
    let jittered: Vec<Vector3<f64>> = raw
        .iter()
        .map(|p| {
            let scale = 1.0 + jitter * rng.sample::<f64, _>(StandardNormal);
            rotation * (p * scale)
        })
        .collect();
    let (ball, _) = normalize_to_ball(&jittered)?;
    Ok(surface_values(ball))
}

/// Three-class dataset (spheres, ellipsoids, two-lobe shapes), deterministic per seed.
pub fn synth_classes(seed: u64, config: &SynthConfig) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, class) in ShapeClass::ALL.iter().enumerate() {
        for i in 0..config.train_per_class + config.test_per_class {
            let samples = synth_shape(*class, config.points, config.jitter, &mut rng)?;
            let (split, id) = if i < config.train_per_class {
                (&mut train, format!("{}_train_{i:03}", class.name()))
            } else {
                (&mut test, format!("{}_test_{:03}", class.name(), i - config.train_per_class))
            };
            split.push(LabeledShape { id, label, samples });
        }
    }
    // interleave classes so mini-batches are mixed without a shuffle
    let interleave = |v: Vec<LabeledShape>, per: usize| -> Vec<LabeledShape> {
        let mut slots: Vec<Option<LabeledShape>> = v.into_iter().map(Some).collect();
        let mut out = Vec::with_capacity(slots.len());
        for i in 0..per {
            for c in 0..ShapeClass::ALL.len() {
                out.push(slots[c * per + i].take().expect("each slot taken once"));
            }
        }
        out
    };
    Ok(Dataset {
        class_names: ShapeClass::ALL.iter().map(|c| c.name().to_string()).collect(),
        train: interleave(train, config.train_per_class),
        test: interleave(test, config.test_per_class),
    })
}
