//! Deterministic product quadrature rules on `[-1, 1]`, the sphere and the ball.

use std::f64::consts::PI;

use crate::special::BallPoint;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending nodes.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A weighted point set on the unit sphere, stored as `(theta, phi)` pairs.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub directions: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// Gauss–Legendre in `cos(phi)` times a uniform trapezoid in `theta`.
    pub fn product(n_polar: usize, n_azimuth: usize) -> Self {
        let (x, w) = gauss_legendre(n_polar);
        let dtheta = 2.0 * PI / n_azimuth as f64;
        let mut directions = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        for (xi, wi) in x.iter().zip(&w) {
            let phi = xi.clamp(-1.0, 1.0).acos();
            for k in 0..n_azimuth {
                directions.push((k as f64 * dtheta, phi));
                weights.push(wi * dtheta);
            }
        }
        Self { directions, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// A weighted point set on the closed unit ball. Weights include the `r^2 sin(phi)`
/// Jacobian, so they sum to the ball volume `4π/3`.
#[derive(Debug, Clone)]
pub struct BallRule {
    pub points: Vec<BallPoint>,
    pub weights: Vec<f64>,
}

impl BallRule {
    /// Product rule: Gauss–Legendre in `r` and `cos(phi)`, trapezoid in `theta`.
    pub fn product(n_radial: usize, n_polar: usize, n_azimuth: usize) -> Self {
        let (xr, wr) = gauss_legendre(n_radial);
        let sphere = SphereRule::product(n_polar, n_azimuth);
        let mut points = Vec::with_capacity(n_radial * sphere.len());
        let mut weights = Vec::with_capacity(n_radial * sphere.len());
        for (x, w) in xr.iter().zip(&wr) {
            let r = 0.5 * (x + 1.0);
            let radial_weight = 0.5 * w * r * r;
            for (&(theta, phi), sw) in sphere.directions.iter().zip(&sphere.weights) {
                points.push(BallPoint::new_unchecked(theta, phi, r));
                weights.push(radial_weight * sw);
            }
        }
        Self { points, weights }
    }

    /// Points belonging to radial node `i` form the contiguous block
    /// `i * per_shell .. (i + 1) * per_shell`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // degree 15 is the exactness limit for 8 nodes
        for p in 0..=15 {
            let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((got - exact).abs() < 1e-14, "degree {p}: {got} vs {exact}");
        }
    }

    #[test]
    fn odd_rule_has_center_node() {
        let (x, w) = gauss_legendre(5);
        assert_eq!(x[2], 0.0);
        assert!((w[2] - 128.0 / 225.0).abs() < 1e-15);
    }

    #[test]
    fn ball_rule_weights_sum_to_volume() {
        let rule = BallRule::product(6, 6, 12);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_rule_weights_sum_to_area() {
        let rule = SphereRule::product(10, 20);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 4.0 * PI).abs() < 1e-13);
    }
}
