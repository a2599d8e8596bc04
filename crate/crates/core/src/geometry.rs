//! Rotations of the ball.

use nalgebra::{Rotation3, UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::special::BallPoint;

/// Rotation `R_z(alpha) R_y(beta)`, which carries the north pole (+z) to the direction
/// with azimuth `alpha` and polar angle `beta`.
pub fn pole_to_axis(alpha: f64, beta: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), alpha) * Rotation3::from_axis_angle(&Vector3::y_axis(), beta)
}

/// Uniformly distributed random rotation (normalized Gaussian quaternion).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation3<f64> {
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let quat = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
    UnitQuaternion::from_quaternion(quat).to_rotation_matrix()
}

/// `k` points uniformly distributed in the closed unit ball.
pub fn uniform_ball_points<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<BallPoint> {
    (0..k)
        .map(|_| {
            let r = rng.random::<f64>().cbrt();
            let z: f64 = rng.random_range(-1.0..=1.0);
            let theta = rng.random_range(0.0..2.0 * std::f64::consts::PI);
            BallPoint::new_unchecked(theta, z.clamp(-1.0, 1.0).acos(), r)
        })
        .collect()
}

pub fn rotate_point(rotation: &Rotation3<f64>, p: &BallPoint) -> BallPoint {
    let mut q = BallPoint::from_cartesian(&(rotation * p.to_cartesian()));
    // rotations preserve the radius; keep it bit-identical
    q.r = p.r;
    q
}

/// Direction `(theta, phi)` of the image of direction `(theta, phi)` under `rotation`.
pub fn rotate_direction(rotation: &Rotation3<f64>, theta: f64, phi: f64) -> (f64, f64) {
    let q = rotate_point(rotation, &BallPoint::new_unchecked(theta, phi, 1.0));
    (q.theta, q.phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pole_maps_to_axis() {
        let rot = pole_to_axis(1.2, 0.7);
        let (theta, phi) = rotate_direction(&rot, 0.0, 0.0);
        assert!((theta - 1.2).abs() < 1e-14);
        assert!((phi - 0.7).abs() < 1e-14);
    }

    #[test]
    fn random_rotations_are_proper() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let r = random_rotation(&mut rng);
            assert!((r.matrix().determinant() - 1.0).abs() < 1e-12);
        }
    }
}
