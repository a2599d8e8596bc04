//! Axial symmetry of ball functions about arbitrary axes.
//!
//! Rotating `f` so that the axis becomes the north pole turns its `m = 0` moments into
//! `Ω'_{n,l,0} = sqrt(4π/(2l+1)) Σ_m Ω_{n,l,m} Y_{l,m}(alpha, beta)`, so the power of the
//! projection onto functions symmetric about the axis is
//! `Σ_{n,l} 4π/(2l+1) |Σ_m Ω_{n,l,m} Y_{l,m}(alpha, beta)|^2`, in units of `c_norm`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conv::DirectionGrid;
use crate::error::{Error, Result};
use crate::moments::{ComplexMomentSet, MomentLayout};
use crate::special::HarmonicTable;

/// Axis through the origin pointing towards azimuth `alpha` and polar angle `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub alpha: f64,
    pub beta: f64,
}

impl Axis {
    pub const NORTH_POLE: Axis = Axis { alpha: 0.0, beta: 0.0 };

    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !(0.0..=PI).contains(&beta) {
            return Err(Error::Domain(format!("invalid axis ({alpha}, {beta})")));
        }
        Ok(Self { alpha, beta })
    }

    pub fn from_vector(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm("axis vector".into()));
        }
        let beta = (z / norm).clamp(-1.0, 1.0).acos();
        let alpha = y.atan2(x).rem_euclid(2.0 * PI);
        Ok(Self { alpha, beta })
    }

    /// The four vertices of a regular tetrahedron, pairwise equi-angular.
    pub fn tetrahedral() -> Vec<Axis> {
        [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)]
            .iter()
            .map(|&(x, y, z)| Axis::from_vector(x, y, z).expect("non-zero vertex"))
            .collect()
    }
}

/// Aligned zonal moments `Ω'_{n,l,0}` about the axis, one per `(n, l)` pair in layout order.
pub fn aligned_zonal_moments(f: &ComplexMomentSet, axis: Axis) -> Vec<Complex64> {
    let layout = MomentLayout::new(f.order());
    let table = HarmonicTable::new(f.order(), axis.alpha, axis.beta);
    let mut out = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    for (e, omega) in layout.complex_entries().iter().zip(f.values()) {
        if current != Some((e.n, e.l)) {
            current = Some((e.n, e.l));
            out.push(Complex64::new(0.0, 0.0));
        }
        let scale = (4.0 * PI / (2 * e.l + 1) as f64).sqrt();
        *out.last_mut().expect("pushed above") += omega * table.get(e.l, e.m) * scale;
    }
    out
}

/// Power of the projection of `f` onto functions symmetric about `axis`.
pub fn symmetry_power(f: &ComplexMomentSet, axis: Axis) -> f64 {
    aligned_zonal_moments(f, axis).iter().map(|v| v.norm_sqr()).sum()
}

/// `symmetry_power / Σ |Ω|^2`, in `[0, 1]` up to roundoff.
pub fn normalized_symmetry(f: &ComplexMomentSet, axis: Axis) -> Result<f64> {
    let total = f.power();
    if total == 0.0 {
        return Err(Error::ZeroNorm("symmetry of the zero function is undefined".into()));
    }
    Ok(symmetry_power(f, axis) / total)
}

/// Normalized symmetry about each axis, concatenated.
pub fn symmetry_descriptor(f: &ComplexMomentSet, axes: &[Axis]) -> Result<Vec<f64>> {
    if axes.is_empty() {
        return Err(Error::Empty("symmetry descriptor needs at least one axis".into()));
    }
    axes.iter().map(|&a| normalized_symmetry(f, a)).collect()
}

/// Grid axis with the largest normalized symmetry; ties keep the first grid direction.
pub fn best_axis(f: &ComplexMomentSet, grid: &DirectionGrid) -> Result<(Axis, f64)> {
    let mut best: Option<(Axis, f64)> = None;
    for &(alpha, beta) in grid.directions() {
        let axis = Axis { alpha, beta };
        let s = normalized_symmetry(f, axis)?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((axis, s));
        }
    }
    best.ok_or_else(|| Error::Empty("empty direction grid".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{real_to_complex, MomentVector};

    fn from_a(order: usize, set: &[(usize, usize, i64, f64)]) -> ComplexMomentSet {
        let layout = MomentLayout::new(order);
        let mut c = MomentVector::zeros(order);
        for &(n, l, m, v) in set {
            c.set_a(&layout, n, l, m, v).unwrap();
        }
        real_to_complex(&c)
    }

    #[test]
    fn zero_function() {
        let f = ComplexMomentSet::zeros(6);
        assert_eq!(symmetry_power(&f, Axis::NORTH_POLE), 0.0);
        assert!(normalized_symmetry(&f, Axis::NORTH_POLE).is_err());
        assert!(symmetry_descriptor(&f, &Axis::tetrahedral()).is_err());
    }

    #[test]
    fn zonal_function_is_fully_symmetric_about_pole() {
        let f = from_a(6, &[(0, 0, 0, 0.3), (2, 2, 0, -1.2), (5, 3, 0, 0.7)]);
        assert!((normalized_symmetry(&f, Axis::NORTH_POLE).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_sectoral_function_has_no_symmetry_about_pole() {
        let f = from_a(6, &[(2, 2, 2, 1.0)]);
        assert!(normalized_symmetry(&f, Axis::NORTH_POLE).unwrap().abs() < 1e-12);
    }

    #[test]
    fn radial_function_is_symmetric_about_every_axis() {
        let f = from_a(6, &[(0, 0, 0, 1.0), (2, 0, 0, 0.5), (6, 0, 0, -0.25)]);
        for v in symmetry_descriptor(&f, &Axis::tetrahedral()).unwrap() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tetrahedral_axes_are_equiangular() {
        let axes = Axis::tetrahedral();
        let v: Vec<[f64; 3]> =
            axes.iter().map(|a| [a.beta.sin() * a.alpha.cos(), a.beta.sin() * a.alpha.sin(), a.beta.cos()]).collect();
        for i in 0..4 {
            for j in i + 1..4 {
                let dot: f64 = (0..3).map(|k| v[i][k] * v[j][k]).sum();
                assert!((dot + 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn best_axis_finds_pole_for_zonal_function() {
        let f = from_a(4, &[(2, 2, 0, 1.0)]);
        let grid = DirectionGrid::from_directions(vec![(0.0, 1.0), (0.0, 0.0), (1.0, 2.0)]).unwrap();
        let (axis, s) = best_axis(&f, &grid).unwrap();
        assert_eq!(axis, Axis::NORTH_POLE);
        assert!((s - 1.0).abs() < 1e-12);
    }
}
