use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::layout::{ComplexMomentSet, MomentLayout, MomentVector, SampleSet};
use super::pinv::{NewtonSchulz, PinvConfig};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::special::{BallPoint, RadialTable, ZernikeBasis, RADIUS_TOLERANCE};

/// Measured orthogonality constant `∫ Z_i Z_i^† dV`, identical for every basis function.
///
/// Evaluated once by 64-node Gauss–Legendre quadrature of `∫ R_{n,l}^2 r^2 dr` over all
/// radial pairs up to order 6 (the angular factor is 1 for orthonormal harmonics).
pub fn norm_constant() -> f64 {
    static CNORM: OnceLock<f64> = OnceLock::new();
    *CNORM.get_or_init(|| {
        let table = RadialTable::new(6);
        let (x, w) = gauss_legendre(64);
        let mut total = 0.0;
        let mut count = 0usize;
        for n in 0..=6 {
            for l in (n % 2..=n).step_by(2) {
                total += x
                    .iter()
                    .zip(&w)
                    .map(|(xi, wi)| {
                        let r = 0.5 * (xi + 1.0);
                        let rad = table.eval(n, l, r);
                        0.5 * wi * rad * rad * r * r
                    })
                    .sum::<f64>();
                count += 1;
            }
        }
        total / count as f64
    })
}

/// `X = (U, V)`: real and imaginary parts of the basis at every sample point.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    order: usize,
    x: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.x
    }
}

fn check_radii(points: &[BallPoint]) -> Result<()> {
    if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| p.r.is_nan() || p.r > 1.0 + RADIUS_TOLERANCE) {
        return Err(Error::Domain(format!("point {i} has radius {} > 1", p.r)));
    }
    Ok(())
}

/// Real design matrix for arbitrary points, with a caller-provided basis.
pub fn design_matrix_with(basis: &ZernikeBasis, layout: &MomentLayout, points: &[BallPoint]) -> Result<DesignMatrix> {
    check_radii(points)?;
    let z = basis.evaluate(layout.entries(), points);
    let half = layout.len();
    let x =
        DMatrix::from_fn(points.len(), layout.dim(), |i, j| if j < half { z[(i, j)].re } else { z[(i, j - half)].im });
    Ok(DesignMatrix { order: layout.order(), x })
}

pub fn build_design_matrix(samples: &SampleSet, order: usize) -> Result<DesignMatrix> {
    let layout = MomentLayout::new(order);
    design_matrix_with(&ZernikeBasis::new(order), &layout, samples.points())
}

/// Least-squares moments `c = X^+ f` with the Newton–Schulz pseudo-inverse.
pub fn fit_moments(samples: &SampleSet, order: usize, config: &PinvConfig) -> Result<MomentVector> {
    MomentFitter::new(order, *config).fit(samples)
}

/// Reusable least-squares fitter holding the basis tables.
#[derive(Debug, Clone)]
pub struct MomentFitter {
    layout: MomentLayout,
    basis: ZernikeBasis,
    config: PinvConfig,
}

impl MomentFitter {
    pub fn new(order: usize, config: PinvConfig) -> Self {
        Self { layout: MomentLayout::new(order), basis: ZernikeBasis::new(order), config }
    }

    pub fn layout(&self) -> &MomentLayout {
        &self.layout
    }

    pub fn config(&self) -> &PinvConfig {
        &self.config
    }

    pub fn fit(&self, samples: &SampleSet) -> Result<MomentVector> {
        self.fit_points(samples.points(), samples.values())
    }

    pub fn fit_points(&self, points: &[BallPoint], values: &[f64]) -> Result<MomentVector> {
        if points.len() != values.len() {
            return Err(Error::Shape(format!("{} points but {} values", points.len(), values.len())));
        }
        if points.len() < self.layout.dim() {
            log::warn!(
                "fitting {} coefficients from only {} samples; returning the minimum-norm solution",
                self.layout.dim(),
                points.len()
            );
        }
        let x = design_matrix_with(&self.basis, &self.layout, points)?.into_matrix();
        let rhs = x.tr_mul(&DVector::from_column_slice(values));
        let ns = NewtonSchulz::new(&x, self.config.alpha)?.run_stable(self.config.iters);
        let c = ns.gram_factor() * rhs;
        Ok(MomentVector::from_coeffs_unchecked(self.layout.order(), c.as_slice().to_vec()))
    }
}

/// Conventional moments by weighted quadrature, divided by the measured norm constant.
pub fn quadrature_moments(samples: &SampleSet, order: usize) -> Result<ComplexMomentSet> {
    let weights = samples.weights().ok_or(Error::MissingWeights)?;
    check_radii(samples.points())?;
    let layout = MomentLayout::new(order);
    let z = ZernikeBasis::new(order).evaluate(layout.complex_entries(), samples.points());
    let scale = 1.0 / norm_constant();
    let values = (0..layout.complex_entries().len())
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, (w, f)) in weights.iter().zip(samples.values()).enumerate() {
                acc += z[(i, j)].conj() * (w * f);
            }
            acc * scale
        })
        .collect();
    ComplexMomentSet::from_values(order, values)
}

/// `(A, B) → Ω`: `Ω_{n,l,0} = A`, `Ω_{n,l,m} = (A - iB)/2`, `Ω_{n,l,-m} = (-1)^m (A + iB)/2`.
pub fn real_to_complex(c: &MomentVector) -> ComplexMomentSet {
    let layout = c.layout();
    let half = layout.len();
    let coeffs = c.coeffs();
    let values = layout
        .complex_entries()
        .iter()
        .map(|e| {
            let i = layout.position(e.n, e.l, e.m.abs()).expect("complex entry has a real slot");
            let (a, b) = (coeffs[i], coeffs[half + i]);
            match e.m {
                0 => Complex64::new(a, 0.0),
                m if m > 0 => Complex64::new(a, -b) * 0.5,
                m => {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    Complex64::new(a, b) * (0.5 * sign)
                }
            }
        })
        .collect();
    ComplexMomentSet::from_values(c.order(), values).expect("layout sized")
}

/// Inverse of [`real_to_complex`]; only the `m >= 0` moments are read.
pub fn complex_to_real(omega: &ComplexMomentSet) -> MomentVector {
    let layout = MomentLayout::new(omega.order());
    let half = layout.len();
    let mut coeffs = vec![0.0; layout.dim()];
    for (j, e) in layout.complex_entries().iter().enumerate() {
        if e.m < 0 {
            continue;
        }
        let i = layout.position(e.n, e.l, e.m).expect("entry exists");
        let v = omega.values()[j];
        if e.m == 0 {
            coeffs[i] = v.re;
        } else {
            coeffs[i] = 2.0 * v.re;
            coeffs[half + i] = -2.0 * v.im;
        }
    }
    MomentVector::from_coeffs_unchecked(omega.order(), coeffs)
}

/// `f̄(p) = Σ A Re Z(p) + B Im Z(p)`.
pub fn reconstruct(c: &MomentVector, points: &[BallPoint]) -> Result<Vec<f64>> {
    let layout = c.layout();
    let x = design_matrix_with(&ZernikeBasis::new(c.order()), &layout, points)?.into_matrix();
    Ok((x * DVector::from_column_slice(c.coeffs())).as_slice().to_vec())
}

/// Reconstruction from complex moments, `Re Σ Ω Z`.
pub fn reconstruct_complex(omega: &ComplexMomentSet, points: &[BallPoint]) -> Result<Vec<f64>> {
    reconstruct(&complex_to_real(omega), points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionError {
    /// `(1/T) Σ |f - f̄|`.
    pub mean_abs: f64,
    /// `mean_abs` as a percentage of the mean `|f|` (infinite for an all-zero signal).
    pub percent: f64,
}

pub fn reconstruction_error(c: &MomentVector, samples: &SampleSet) -> Result<ReconstructionError> {
    if samples.is_empty() {
        return Err(Error::Empty("reconstruction error of an empty sample set".into()));
    }
    let approx = reconstruct(c, samples.points())?;
    Ok(error_between(samples.values(), &approx))
}

pub(crate) fn error_between(truth: &[f64], approx: &[f64]) -> ReconstructionError {
    let t = truth.len() as f64;
    let mean_abs = truth.iter().zip(approx).map(|(a, b)| (a - b).abs()).sum::<f64>() / t;
    let scale = truth.iter().map(|v| v.abs()).sum::<f64>() / t;
    let percent = if scale > 0.0 {
        100.0 * mean_abs / scale
    } else if mean_abs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    ReconstructionError { mean_abs, percent }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ZernikeIndex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn uniform_ball(k: usize, seed: u64) -> Vec<BallPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..k)
            .map(|_| {
                let r: f64 = rng.random::<f64>().cbrt();
                let z: f64 = rng.random_range(-1.0..1.0);
                BallPoint::new_unchecked(rng.random_range(0.0..2.0 * PI), z.acos(), r)
            })
            .collect()
    }

    #[test]
    fn norm_constant_is_one_third() {
        assert!((norm_constant() - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn design_matrix_single_point_at_origin() {
        let s = SampleSet::new(vec![BallPoint::new_unchecked(0.0, 0.0, 0.0)], vec![1.0]).unwrap();
        let x = build_design_matrix(&s, 0).unwrap();
        assert_eq!(x.matrix().shape(), (1, 2));
        assert!((x.matrix()[(0, 0)] - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        assert_eq!(x.matrix()[(0, 1)], 0.0);
    }

    #[test]
    fn design_matrix_zonal_imaginary_columns_are_zero() {
        let pts = uniform_ball(300, 9);
        let s = SampleSet::new(pts, vec![0.0; 300]).unwrap();
        let x = build_design_matrix(&s, 6).unwrap();
        let layout = MomentLayout::new(6);
        for i in layout.zonal_positions() {
            assert!(x.matrix().column(layout.len() + i).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn design_matrix_rejects_points_outside_ball() {
        let basis = ZernikeBasis::new(2);
        let layout = MomentLayout::new(2);
        let err = design_matrix_with(&basis, &layout, &[BallPoint::new_unchecked(0.0, 0.0, 1.01)]);
        assert!(err.is_err());
    }

    #[test]
    fn fit_recovers_single_basis_function() {
        let pts = uniform_ball(4000, 11);
        let idx = ZernikeIndex::new(2, 2, 1).unwrap();
        let basis = ZernikeBasis::new(6);
        let values: Vec<f64> = pts.iter().map(|p| basis.eval(idx, *p).re).collect();
        let samples = SampleSet::new(pts, values).unwrap();
        let c = fit_moments(&samples, 6, &PinvConfig::offline()).unwrap();
        let layout = MomentLayout::new(6);
        let target = layout.position(2, 2, 1).unwrap();
        for (i, v) in c.coeffs().iter().enumerate() {
            let expected = if i == target { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-6, "coefficient {i} = {v}");
        }
        for i in layout.zonal_positions() {
            assert_eq!(c.coeffs()[layout.len() + i], 0.0);
        }
    }

    #[test]
    fn fit_of_zero_function_is_zero() {
        let s = SampleSet::new(uniform_ball(500, 2), vec![0.0; 500]).unwrap();
        let c = fit_moments(&s, 6, &PinvConfig::offline()).unwrap();
        assert!(c.coeffs().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadrature_requires_weights() {
        let s = SampleSet::new(uniform_ball(10, 2), vec![0.0; 10]).unwrap();
        assert!(matches!(quadrature_moments(&s, 2), Err(Error::MissingWeights)));
        let q = quadrature_moments(&s.with_monte_carlo_weights(), 2).unwrap();
        assert!(q.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn quadrature_of_constant_basis_function() {
        let rule = crate::quadrature::BallRule::product(8, 8, 16);
        let value = 1.0 / (4.0 * PI).sqrt();
        let s = SampleSet::new(rule.points.clone(), vec![value; rule.len()])
            .unwrap()
            .with_weights(rule.weights.clone())
            .unwrap();
        let omega = quadrature_moments(&s, 4).unwrap();
        let layout = MomentLayout::new(4);
        for (j, e) in layout.complex_entries().iter().enumerate() {
            let expected = if (e.n, e.l, e.m) == (0, 0, 0) { 1.0 } else { 0.0 };
            assert!((omega.values()[j] - expected).norm() < 1e-12, "{e:?}");
        }
    }

    #[test]
    fn real_complex_bridge() {
        let layout = MomentLayout::new(2);
        let mut c = MomentVector::zeros(2);
        c.set_a(&layout, 1, 1, 1, 2.0).unwrap();
        let omega = real_to_complex(&c);
        assert!((omega.get(&layout, 1, 1, 1).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((omega.get(&layout, 1, 1, -1).unwrap() - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!(real_to_complex(&MomentVector::zeros(3)).values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn bridge_preserves_pointwise_reconstruction() {
        let layout = MomentLayout::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut coeffs: Vec<f64> = (0..layout.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        for i in layout.zonal_positions() {
            coeffs[layout.len() + i] = 0.0;
        }
        let c = MomentVector::from_coeffs(4, coeffs).unwrap();
        let omega = real_to_complex(&c);
        let basis = ZernikeBasis::new(4);
        for p in uniform_ball(20, 6) {
            let direct: Complex64 =
                layout.complex_entries().iter().zip(omega.values()).map(|(e, w)| w * basis.eval(*e, p)).sum();
            let real = reconstruct(&c, &[p]).unwrap()[0];
            assert!(direct.im.abs() < 1e-12);
            assert!((direct.re - real).abs() < 1e-12);
        }
        let back = complex_to_real(&omega);
        for (a, b) in back.coeffs().iter().zip(c.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn reconstruction_error_of_zero_moments() {
        let s = SampleSet::new(uniform_ball(50, 1), vec![1.0; 50]).unwrap();
        let err = reconstruction_error(&MomentVector::zeros(3), &s).unwrap();
        assert_eq!(err.mean_abs, 1.0);
        assert_eq!(err.percent, 100.0);
        let empty = SampleSet::new(vec![], vec![]).unwrap();
        assert!(reconstruction_error(&MomentVector::zeros(3), &empty).is_err());
    }
}
