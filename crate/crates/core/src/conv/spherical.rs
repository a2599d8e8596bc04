//! Spherical convolution on S², the baseline the volumetric operator is compared against.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lm_index;
use crate::error::{Error, Result};
use crate::moments::{NewtonSchulz, PinvConfig};
use crate::special::HarmonicTable;

/// Band-limited function on S², stored as dense `f̂(l, m)` for `|m| <= l <= lmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalSignal {
    lmax: usize,
    values: Vec<Complex64>,
}

impl SphericalSignal {
    pub fn zeros(lmax: usize) -> Self {
        Self { lmax, values: vec![Complex64::new(0.0, 0.0); (lmax + 1) * (lmax + 1)] }
    }

    pub fn from_values(lmax: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != (lmax + 1) * (lmax + 1) {
            return Err(Error::Shape(format!("{} coefficients for lmax {lmax}", values.len())));
        }
        Ok(Self { lmax, values })
    }

    /// Real signal from `(A, B)` blocks over `(l, m >= 0)`, see [`sh_real_entries`].
    pub fn from_real(lmax: usize, coeffs: &[f64]) -> Result<Self> {
        let entries = sh_real_entries(lmax);
        if coeffs.len() != 2 * entries.len() {
            return Err(Error::Shape(format!("{} real coefficients for lmax {lmax}", coeffs.len())));
        }
        let mut out = Self::zeros(lmax);
        for (i, &(l, m)) in entries.iter().enumerate() {
            let (a, b) = (coeffs[i], coeffs[entries.len() + i]);
            if m == 0 {
                out.values[lm_index(l, 0)] = Complex64::new(a, 0.0);
            } else {
                let sign = if m % 2 == 0 { 0.5 } else { -0.5 };
                out.values[lm_index(l, m)] = Complex64::new(a, -b) * 0.5;
                out.values[lm_index(l, -m)] = Complex64::new(a, b) * sign;
            }
        }
        Ok(out)
    }

    /// `(A, B)` blocks over `(l, m >= 0)`, inverse of [`SphericalSignal::from_real`].
    pub fn to_real(&self) -> Vec<f64> {
        let entries = sh_real_entries(self.lmax);
        let mut out = vec![0.0; 2 * entries.len()];
        for (i, &(l, m)) in entries.iter().enumerate() {
            let v = self.get(l, m);
            if m == 0 {
                out[i] = v.re;
            } else {
                out[i] = 2.0 * v.re;
                out[entries.len() + i] = -2.0 * v.im;
            }
        }
        out
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        self.values[lm_index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, v: Complex64) {
        self.values[lm_index(l, m)] = v;
    }

    /// `Σ f̂(l, m) Y_{l,m}(theta, phi)`.
    pub fn eval(&self, theta: f64, phi: f64) -> Complex64 {
        let table = HarmonicTable::new(self.lmax, theta, phi);
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 0..=self.lmax {
            let li = l as i64;
            for m in -li..=li {
                acc += self.get(l, m) * table.get(l, m);
            }
        }
        acc
    }
}

/// Real-layout entries `(l, m)` with `0 <= m <= l <= lmax`, sorted lexicographically.
pub fn sh_real_entries(lmax: usize) -> Vec<(usize, i64)> {
    (0..=lmax).flat_map(|l| (0..=l as i64).map(move |m| (l, m))).collect()
}

/// Least-squares spherical-harmonic fit of values sampled at directions `(theta, phi)`.
pub fn fit_sh(directions: &[(f64, f64)], values: &[f64], lmax: usize, config: &PinvConfig) -> Result<SphericalSignal> {
    if directions.len() != values.len() {
        return Err(Error::Shape(format!("{} directions but {} values", directions.len(), values.len())));
    }
    let entries = sh_real_entries(lmax);
    let half = entries.len();
    let mut x = DMatrix::zeros(directions.len(), 2 * half);
    for (i, &(theta, phi)) in directions.iter().enumerate() {
        let table = HarmonicTable::new(lmax, theta, phi);
        for (j, &(l, m)) in entries.iter().enumerate() {
            let y = table.get(l, m);
            x[(i, j)] = y.re;
            x[(i, half + j)] = y.im;
        }
    }
    let rhs = x.tr_mul(&DVector::from_column_slice(values));
    let ns = NewtonSchulz::new(&x, config.alpha)?.run_stable(config.iters);
    let c = ns.gram_factor() * rhs;
    SphericalSignal::from_real(lmax, c.as_slice())
}

/// `(f * g)^(l, m) = sqrt(4π/(2l+1)) f̂(l, m) conj(ĝ(l, 0))`; only the zonal part of `g` is read.
pub fn spherical_conv(f: &SphericalSignal, g: &SphericalSignal) -> Result<SphericalSignal> {
    if f.lmax != g.lmax {
        return Err(Error::Shape(format!("lmax {} vs {}", f.lmax, g.lmax)));
    }
    let mut out = SphericalSignal::zeros(f.lmax);
    for l in 0..=f.lmax {
        let scale = (4.0 * PI / (2 * l + 1) as f64).sqrt() * g.get(l, 0).conj();
        let li = l as i64;
        for m in -li..=li {
            out.set(l, m, f.get(l, m) * scale);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::SphereRule;

    #[test]
    fn constant_modes() {
        let mut f = SphericalSignal::zeros(6);
        f.set(0, 0, Complex64::new(1.0, 0.0));
        let out = spherical_conv(&f, &f).unwrap();
        assert!((out.get(0, 0).re - (4.0 * PI).sqrt()).abs() < 1e-14);
        let zero = spherical_conv(&f, &SphericalSignal::zeros(6)).unwrap();
        assert!(zero.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn real_layout_round_trip() {
        let coeffs: Vec<f64> =
            (0..56)
                .map(|i| {
                    if (28..).contains(&i) && [28, 29, 31, 34, 38, 43, 49].contains(&i) {
                        0.0
                    } else {
                        (i as f64).cos()
                    }
                })
                .collect();
        let s = SphericalSignal::from_real(6, &coeffs).unwrap();
        let back = s.to_real();
        for (a, b) in coeffs.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
        let v = s.eval(0.3, 1.1);
        assert!(v.im.abs() < 1e-13);
    }

    #[test]
    fn fit_recovers_band_limited_signal() {
        let coeffs: Vec<f64> = (0..30).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
        let mut coeffs = coeffs;
        for (i, &(_, m)) in sh_real_entries(4).iter().enumerate() {
            if m == 0 {
                coeffs[15 + i] = 0.0;
            }
        }
        let truth = SphericalSignal::from_real(4, &coeffs).unwrap();
        let rule = SphereRule::product(12, 24);
        let values: Vec<f64> = rule.directions.iter().map(|&(t, p)| truth.eval(t, p).re).collect();
        let fit = fit_sh(&rule.directions, &values, 4, &PinvConfig::offline_auto()).unwrap();
        for (a, b) in fit.values().iter().zip(truth.values()) {
            assert!((a - b).norm() < 1e-8);
        }
    }
}
