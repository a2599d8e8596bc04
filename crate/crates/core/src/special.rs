//! Associated Legendre functions, spherical harmonics and 3D Zernike basis functions.
//!
//! Conventions: `theta` is the azimuth in `[0, 2π)`, `phi` the polar angle in `[0, π]`
//! measured from the +z axis, and `r` the radius in `[0, 1]`. The Legendre function
//! carries the Condon–Shortley factor `(-1)^m`, and the spherical harmonic carries a
//! second `(-1)^m`, so both phases cancel in `Y_{l,m}` for `m >= 0`. Negative orders are
//! always obtained from `Y_{l,-m} = (-1)^m conj(Y_{l,m})`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest spherical-harmonic degree supported by the evaluators.
pub const MAX_DEGREE: usize = 20;

/// Tolerance used when validating that a point lies in the closed unit ball.
pub const RADIUS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HarmonicIndex {
    pub l: usize,
    pub m: i64,
}

impl HarmonicIndex {
    pub fn new(l: usize, m: i64) -> Result<Self> {
        if m.unsigned_abs() as usize > l {
            return Err(Error::Index(format!("|m| = {} exceeds l = {l}", m.abs())));
        }
        if l > MAX_DEGREE {
            return Err(Error::Index(format!("degree {l} exceeds {MAX_DEGREE}")));
        }
        Ok(Self { l, m })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ZernikeIndex {
    pub n: usize,
    pub l: usize,
    pub m: i64,
}

impl ZernikeIndex {
    pub fn new(n: usize, l: usize, m: i64) -> Result<Self> {
        if l > n || !(n - l).is_multiple_of(2) {
            return Err(Error::Index(format!("(n, l) = ({n}, {l}) requires 0 <= l <= n and n - l even")));
        }
        HarmonicIndex::new(l, m)?;
        Ok(Self { n, l, m })
    }
}

/// A point of the closed unit ball in spherical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    pub theta: f64,
    pub phi: f64,
    pub r: f64,
}

impl BallPoint {
    pub fn new(theta: f64, phi: f64, r: f64) -> Result<Self> {
        if !(theta.is_finite() && phi.is_finite() && r.is_finite()) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        if !(0.0..=2.0 * PI).contains(&theta) {
            return Err(Error::Domain(format!("azimuth {theta} outside [0, 2π)")));
        }
        if !(0.0..=PI).contains(&phi) {
            return Err(Error::Domain(format!("polar angle {phi} outside [0, π]")));
        }
        if !(0.0..=1.0 + RADIUS_TOLERANCE).contains(&r) {
            return Err(Error::Domain(format!("radius {r} outside [0, 1]")));
        }
        Ok(Self { theta, phi, r: r.min(1.0) })
    }

    pub const fn new_unchecked(theta: f64, phi: f64, r: f64) -> Self {
        Self { theta, phi, r }
    }

    pub fn from_cartesian(v: &Vector3<f64>) -> Self {
        let r = v.norm();
        if r == 0.0 {
            return Self::new_unchecked(0.0, 0.0, 0.0);
        }
        let phi = (v.z / r).clamp(-1.0, 1.0).acos();
        let mut theta = v.y.atan2(v.x);
        if theta < 0.0 {
            theta += 2.0 * PI;
        }
        if theta >= 2.0 * PI {
            theta = 0.0;
        }
        Self::new_unchecked(theta, phi, r)
    }

    pub fn to_cartesian(&self) -> Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(self.r * sp * ct, self.r * sp * st, self.r * cp)
    }

    /// Unit direction `(sinφ cosθ, sinφ sinθ, cosφ)` regardless of radius.
    pub fn direction(&self) -> Vector3<f64> {
        BallPoint::new_unchecked(self.theta, self.phi, 1.0).to_cartesian()
    }
}

/// Associated Legendre function `P_l^m(x)` including the Condon–Shortley factor.
///
/// Evaluated by the `P_m^m` seed and the upward recurrence in `l`.
pub fn assoc_legendre(l: usize, m: usize, x: f64) -> Result<f64> {
    if m > l {
        return Err(Error::Domain(format!("order m = {m} exceeds degree l = {l}")));
    }
    if x.is_nan() || x.abs() > 1.0 {
        return Err(Error::Domain(format!("argument {x} outside [-1, 1]")));
    }
    let s = ((1.0 - x) * (1.0 + x)).sqrt();
    Ok(legendre_column(l, m, x, s)[l - m])
}

/// `P_k^m(x)` for `k = m..=lmax`, given `x = cos(phi)` and `s = sin(phi)`.
fn legendre_column(lmax: usize, m: usize, x: f64, s: f64) -> Vec<f64> {
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= -((2 * k - 1) as f64) * s;
    }
    let mut out = Vec::with_capacity(lmax - m + 1);
    out.push(pmm);
    if lmax == m {
        return out;
    }
    let mut prev = pmm;
    let mut cur = x * (2 * m + 1) as f64 * pmm;
    out.push(cur);
    for l in (m + 2)..=lmax {
        let next = (x * (2 * l - 1) as f64 * cur - (l + m - 1) as f64 * prev) / (l - m) as f64;
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

fn harmonic_norm(l: usize, m: usize) -> f64 {
    // (l - m)! / (l + m)! as a product, avoids forming large factorials
    let mut ratio = 1.0;
    for k in (l - m + 1)..=(l + m) {
        ratio /= k as f64;
    }
    ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt()
}

/// All `Y_{l,m}(theta, phi)` for `0 <= m <= l <= lmax` at a single direction.
#[derive(Debug, Clone)]
pub struct HarmonicTable {
    lmax: usize,
    values: Vec<Complex64>,
}

impl HarmonicTable {
    pub fn new(lmax: usize, theta: f64, phi: f64) -> Self {
        let (s, x) = phi.sin_cos();
        let mut values = vec![Complex64::new(0.0, 0.0); (lmax + 1) * (lmax + 2) / 2];
        for m in 0..=lmax {
            let column = legendre_column(lmax, m, x, s);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let phase = if m == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                let (sn, cs) = (m as f64 * theta).sin_cos();
                Complex64::new(cs, sn)
            };
            for (offset, p) in column.iter().enumerate() {
                let l = m + offset;
                values[Self::slot(l, m)] = phase * (sign * harmonic_norm(l, m) * p);
            }
        }
        Self { lmax, values }
    }

    fn slot(l: usize, m: usize) -> usize {
        l * (l + 1) / 2 + m
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// `Y_{l,m}` for any `|m| <= l <= lmax`.
    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        let am = m.unsigned_abs() as usize;
        let y = self.values[Self::slot(l, am)];
        if m >= 0 {
            y
        } else if am.is_multiple_of(2) {
            y.conj()
        } else {
            -y.conj()
        }
    }
}

/// Spherical harmonic `Y_{l,m}(theta, phi)`.
pub fn sph_harmonic(idx: HarmonicIndex, theta: f64, phi: f64) -> Complex64 {
    HarmonicTable::new(idx.l, theta, phi).get(idx.l, idx.m)
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Coefficient `q^v_{nl}` of the 3D Zernike radial polynomial.
///
/// The integer binomial factors are combined into an exact reduced fraction before the
/// single floating-point division and the `sqrt((2n+3)/3)` scaling.
pub fn zernike_radial_coeff(n: usize, l: usize, v: usize) -> Result<f64> {
    if l > n || !(n - l).is_multiple_of(2) {
        return Err(Error::Index(format!("invalid radial pair (n, l) = ({n}, {l})")));
    }
    let k = (n - l) / 2;
    if v > k {
        return Err(Error::Index(format!("v = {v} exceeds (n - l)/2 = {k}")));
    }
    let (k64, l64, v64, d64) = (k as u64, l as u64, v as u64, (n - l) as u64);
    let mut num = binomial(d64, k64) * binomial(k64, v64);
    let mut den = binomial(k64 + l64 + v64, k64) << d64;
    let g = gcd(num, den);
    num /= g;
    den /= g;
    let tail = binomial(2 * (k64 + l64 + v64) + 1, d64);
    let g = gcd(tail, den);
    let num = num * (tail / g);
    let den = den / g;
    let sign = if (k + v).is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * ((2 * n + 3) as f64 / 3.0).sqrt() * (num as f64 / den as f64))
}

/// Index of the radial pair `(n, l)` in the canonical `(n, l)` enumeration.
pub fn radial_pair_index(n: usize, l: usize) -> usize {
    // pairs with n' < n: sum_{n'} (n'/2 + 1) in integer division
    let before: usize = (0..n).map(|k| k / 2 + 1).sum();
    before + (l - n % 2) / 2
}

/// Radial polynomial coefficients `q^v_{nl}` for every valid `(n, l)` up to an order.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    order: usize,
    coeffs: Vec<Vec<f64>>,
}

impl RadialTable {
    pub fn new(order: usize) -> Self {
        let mut coeffs = Vec::new();
        for n in 0..=order {
            for l in (n % 2..=n).step_by(2) {
                let row =
                    (0..=(n - l) / 2).map(|v| zernike_radial_coeff(n, l, v).expect("valid radial index")).collect();
                coeffs.push(row);
            }
        }
        Self { order, coeffs }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficient(&self, n: usize, l: usize, v: usize) -> f64 {
        self.coeffs[radial_pair_index(n, l)][v]
    }

    /// Overwrites a single coefficient. Used by mutation tests of the verification suite.
    pub fn set_coefficient(&mut self, n: usize, l: usize, v: usize, value: f64) {
        self.coeffs[radial_pair_index(n, l)][v] = value;
    }

    /// `R_{n,l}(r) = Σ_v q^v_{nl} r^{2v+l}`.
    pub fn eval(&self, n: usize, l: usize, r: f64) -> f64 {
        let row = &self.coeffs[radial_pair_index(n, l)];
        let r2 = r * r;
        // Horner in r^2, then the r^l prefactor
        let mut acc = 0.0;
        for q in row.iter().rev() {
            acc = acc * r2 + q;
        }
        acc * r.powi(l as i32)
    }

    /// Values of every radial pair at `r`, in pair order.
    pub fn eval_all(&self, r: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        for n in 0..=self.order {
            for l in (n % 2..=n).step_by(2) {
                out.push(self.eval(n, l, r));
            }
        }
        out
    }
}

/// `R_{n,l}(r)`.
pub fn zernike_radial(n: usize, l: usize, r: f64) -> Result<f64> {
    ZernikeIndex::new(n, l, 0)?;
    let mut acc = 0.0;
    for v in 0..=(n - l) / 2 {
        acc += zernike_radial_coeff(n, l, v)? * r.powi((2 * v + l) as i32);
    }
    Ok(acc)
}

/// `Z_{n,l,m}(r, theta, phi) = R_{n,l}(r) Y_{l,m}(theta, phi)`.
pub fn zernike_eval(idx: ZernikeIndex, p: BallPoint) -> Complex64 {
    let radial = zernike_radial(idx.n, idx.l, p.r).expect("ZernikeIndex is validated");
    sph_harmonic(HarmonicIndex { l: idx.l, m: idx.m }, p.theta, p.phi) * radial
}

/// Batch evaluator of 3D Zernike basis functions with a fixed radial coefficient table.
#[derive(Debug, Clone)]
pub struct ZernikeBasis {
    radial: RadialTable,
}

impl ZernikeBasis {
    pub fn new(order: usize) -> Self {
        Self { radial: RadialTable::new(order) }
    }

    pub fn with_radial_table(radial: RadialTable) -> Self {
        Self { radial }
    }

    pub fn order(&self) -> usize {
        self.radial.order()
    }

    pub fn radial(&self) -> &RadialTable {
        &self.radial
    }

    pub fn eval(&self, idx: ZernikeIndex, p: BallPoint) -> Complex64 {
        let table = HarmonicTable::new(idx.l, p.theta, p.phi);
        table.get(idx.l, idx.m) * self.radial.eval(idx.n, idx.l, p.r)
    }

    /// Fills `out[j] = Z_{indices[j]}(p)`.
    pub fn eval_row(&self, indices: &[ZernikeIndex], p: &BallPoint, out: &mut [Complex64]) {
        let order = self.order();
        let harmonics = HarmonicTable::new(order, p.theta, p.phi);
        let radial = self.radial.eval_all(p.r);
        for (slot, idx) in out.iter_mut().zip(indices) {
            *slot = harmonics.get(idx.l, idx.m) * radial[radial_pair_index(idx.n, idx.l)];
        }
    }

    /// Dense `points.len() × indices.len()` matrix of basis values.
    ///
    /// Rows are computed independently, so the result does not depend on the thread count.
    pub fn evaluate(&self, indices: &[ZernikeIndex], points: &[BallPoint]) -> DMatrix<Complex64> {
        assert!(indices.iter().all(|i| i.n <= self.order()), "index order exceeds basis order");
        let cols = indices.len();
        let rows: Vec<Vec<Complex64>> = points
            .par_iter()
            .map(|p| {
                let mut row = vec![Complex64::new(0.0, 0.0); cols];
                self.eval_row(indices, p, &mut row);
                row
            })
            .collect();
        DMatrix::from_fn(points.len(), cols, |i, j| rows[i][j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn legendre_trivial_values() {
        assert_eq!(assoc_legendre(0, 0, 0.3).unwrap(), 1.0);
        assert!((assoc_legendre(1, 0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        // -3 x sqrt(1 - x^2), hand-differentiated Rodrigues form
        let expected = -3.0 * 0.4 * (1.0f64 - 0.16).sqrt();
        assert!((assoc_legendre(2, 1, 0.4).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn legendre_domain_errors() {
        assert!(matches!(assoc_legendre(2, 3, 0.1), Err(Error::Domain(_))));
        assert!(matches!(assoc_legendre(2, 1, 1.5), Err(Error::Domain(_))));
        assert!(assoc_legendre(2, 1, f64::NAN).is_err());
    }

    #[test]
    fn constant_harmonic() {
        let y = sph_harmonic(HarmonicIndex::new(0, 0).unwrap(), 1.3, 2.1);
        assert!((y.re - 0.282_094_791_773_878_1).abs() < 1e-15);
        assert_eq!(y.im, 0.0);
    }

    #[test]
    fn negative_order_uses_conjugation() {
        let pos = sph_harmonic(HarmonicIndex::new(1, 1).unwrap(), 0.7, 1.1);
        let neg = sph_harmonic(HarmonicIndex::new(1, -1).unwrap(), 0.7, 1.1);
        assert_eq!(neg, -pos.conj());
    }

    #[test]
    fn harmonic_index_validation() {
        assert!(HarmonicIndex::new(2, -3).is_err());
        assert!(HarmonicIndex::new(MAX_DEGREE + 1, 0).is_err());
        assert!(ZernikeIndex::new(3, 2, 0).is_err());
        assert!(ZernikeIndex::new(2, 3, 0).is_err());
        assert!(ZernikeIndex::new(4, 2, -2).is_ok());
    }

    #[test]
    fn harmonics_vanish_at_pole_for_nonzero_order() {
        let t = HarmonicTable::new(6, 0.4, 0.0);
        for l in 1..=6 {
            for m in 1..=l as i64 {
                assert_eq!(t.get(l, m), Complex64::new(0.0, 0.0));
            }
            let expected = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
            assert!((t.get(l, 0).re - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn radial_coefficients_small_orders() {
        assert_eq!(zernike_radial_coeff(0, 0, 0).unwrap(), 1.0);
        assert!((zernike_radial_coeff(1, 1, 0).unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(zernike_radial_coeff(2, 1, 0).is_err());
        assert!(zernike_radial_coeff(2, 0, 2).is_err());
    }

    #[test]
    fn radial_polynomial_values() {
        assert_eq!(zernike_radial(0, 0, 0.42).unwrap(), 1.0);
        let v = zernike_radial(1, 1, 0.5).unwrap();
        assert!((v - (5.0f64 / 3.0).sqrt() * 0.5).abs() < 1e-15);
        for n in 1..=8 {
            for l in (n % 2..=n).step_by(2).filter(|&l| l >= 1) {
                assert_eq!(zernike_radial(n, l, 0.0).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn radial_value_at_unit_radius() {
        // R_{n,l}(1) = sqrt((2n+3)/3) for every l
        let table = RadialTable::new(12);
        for n in 0..=12 {
            for l in (n % 2..=n).step_by(2) {
                let expected = ((2 * n + 3) as f64 / 3.0).sqrt();
                assert!((table.eval(n, l, 1.0) - expected).abs() < 1e-11, "({n},{l})");
            }
        }
    }

    #[test]
    fn constant_zernike_function() {
        let z = zernike_eval(ZernikeIndex::new(0, 0, 0).unwrap(), BallPoint::new(0.3, 2.0, 0.77).unwrap());
        assert!((z.re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pair_index_is_dense() {
        let mut expected = 0;
        for n in 0..10 {
            for l in (n % 2..=n).step_by(2) {
                assert_eq!(radial_pair_index(n, l), expected);
                expected += 1;
            }
        }
    }

    #[test]
    fn cartesian_round_trip() {
        let p = BallPoint::new(5.9, 0.3, 0.8).unwrap();
        let q = BallPoint::from_cartesian(&p.to_cartesian());
        assert!((p.theta - q.theta).abs() < 1e-14);
        assert!((p.phi - q.phi).abs() < 1e-14);
        assert!((p.r - q.r).abs() < 1e-15);
    }

    #[test]
    fn batch_matches_pointwise() {
        let basis = ZernikeBasis::new(4);
        let idx: Vec<_> = [(0, 0, 0), (2, 2, -1), (3, 1, 1), (4, 4, 3)]
            .iter()
            .map(|&(n, l, m)| ZernikeIndex::new(n, l, m).unwrap())
            .collect();
        let pts = [BallPoint::new(0.1, 0.2, 0.3).unwrap(), BallPoint::new(4.0, 2.5, 0.99).unwrap()];
        let mat = basis.evaluate(&idx, &pts);
        for (i, p) in pts.iter().enumerate() {
            for (j, id) in idx.iter().enumerate() {
                assert!((mat[(i, j)] - zernike_eval(*id, *p)).norm() < 1e-14);
            }
        }
    }

    proptest! {
        #[test]
        fn zernike_conjugation_identity(
            n in 0usize..=8, lsel in 0usize..5, msel in 0usize..9,
            theta in 0.0..(2.0 * PI), phi in 0.0..PI, r in 0.0f64..=1.0,
        ) {
            let ls: Vec<usize> = (n % 2..=n).step_by(2).collect();
            let l = ls[lsel % ls.len()];
            let m = (msel % (l + 1)) as i64;
            let p = BallPoint::new(theta, phi, r).unwrap();
            let plus = zernike_eval(ZernikeIndex::new(n, l, m).unwrap(), p);
            let minus = zernike_eval(ZernikeIndex::new(n, l, -m).unwrap(), p);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((minus - plus.conj() * sign).norm() <= 1e-15 * (1.0 + plus.norm()));
        }
    }
}
