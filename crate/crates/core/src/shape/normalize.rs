use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::SampleSet;
use crate::special::BallPoint;

/// Affine map applied by [`normalize_to_ball`]: `p -> (p - centroid) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub centroid: [f64; 3],
    pub scale: f64,
}

/// Centers points on their centroid and scales the farthest one to radius exactly 1.
pub fn normalize_to_ball(points: &[Vector3<f64>]) -> Result<(Vec<BallPoint>, NormalizationRecord)> {
    if points.is_empty() {
        return Err(Error::Empty("no points to normalize".into()));
    }
    let centroid = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    let scale = points.iter().map(|p| (p - centroid).norm()).fold(0.0, f64::max);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::ZeroNorm("all points coincide; cannot normalize".into()));
    }
    let mut ball: Vec<BallPoint> = points
        .iter()
        .map(|p| {
            let mut q = BallPoint::from_cartesian(&((p - centroid) / scale));
            q.r = q.r.min(1.0);
            q
        })
        .collect();
    let far = points
        .iter()
        .map(|p| (p - centroid).norm())
        .enumerate()
        .fold((0, 0.0), |best, (i, d)| if d > best.1 { (i, d) } else { best })
        .0;
    ball[far].r = 1.0;
    Ok((ball, NormalizationRecord { centroid: centroid.into(), scale }))
}

pub fn invert_normalization(record: &NormalizationRecord, points: &[BallPoint]) -> Vec<Vector3<f64>> {
    let c = Vector3::from(record.centroid);
    points.iter().map(|p| p.to_cartesian() * record.scale + c).collect()
}

/// Surface function `f = r` at every sample.
pub fn surface_values(points: Vec<BallPoint>) -> SampleSet {
    let values = points.iter().map(|p| p.r).collect();
    SampleSet::new(points, values).expect("normalized points lie in the ball")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::uniform_ball_points;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sphere_maps_to_unit_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dirs: Vec<Vector3<f64>> = uniform_ball_points(&mut rng, 200).iter().map(|p| p.direction()).collect();
        // antipodal pairs keep the centroid exactly at the center
        let pts: Vec<Vector3<f64>> = dirs
            .iter()
            .flat_map(|d| [Vector3::new(1.0, 1.0, 1.0) + d * 5.0, Vector3::new(1.0, 1.0, 1.0) - d * 5.0])
            .collect();
        let (ball, rec) = normalize_to_ball(&pts).unwrap();
        assert!((rec.scale - 5.0).abs() < 1e-12);
        for p in &ball {
            assert!((p.r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coincident_points_are_rejected() {
        let p = vec![Vector3::new(1.0, 2.0, 3.0); 4];
        assert!(matches!(normalize_to_ball(&p), Err(Error::ZeroNorm(_))));
        assert!(normalize_to_ball(&[]).is_err());
    }

    #[test]
    fn normalization_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Vector3<f64>> = uniform_ball_points(&mut rng, 100)
            .iter()
            .map(|p| p.to_cartesian() * 3.0 + Vector3::new(-2.0, 0.5, 7.0))
            .collect();
        let (ball, rec) = normalize_to_ball(&pts).unwrap();
        assert!(ball.iter().all(|p| p.r <= 1.0));
        assert!(ball.iter().any(|p| p.r == 1.0));
        for (a, b) in invert_normalization(&rec, &ball).iter().zip(&pts) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn values_equal_radius() {
        let s = surface_values(vec![BallPoint::new_unchecked(0.1, 0.2, 0.7), BallPoint::new_unchecked(0.0, 1.0, 1.0)]);
        assert_eq!(s.values(), &[0.7, 1.0]);
    }
}
