use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lm_index;
use crate::error::{Error, Result};
use crate::special::HarmonicTable;

/// Rotation axes `(alpha, beta)`: azimuth and polar angle of the image of the north pole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionGrid {
    directions: Vec<(f64, f64)>,
}

impl DirectionGrid {
    pub const DEFAULT_AZIMUTH: usize = 32;
    pub const DEFAULT_POLAR: usize = 16;

    /// `alpha_i = 2π i / n_azimuth`, `beta_j = π (j + 1/2) / n_polar`, azimuth varying fastest.
    pub fn equiangular(n_azimuth: usize, n_polar: usize) -> Result<Self> {
        if n_azimuth == 0 || n_polar == 0 {
            return Err(Error::Empty("direction grid needs at least one direction".into()));
        }
        let directions = (0..n_polar)
            .flat_map(|j| {
                let beta = PI * (j as f64 + 0.5) / n_polar as f64;
                (0..n_azimuth).map(move |i| (2.0 * PI * i as f64 / n_azimuth as f64, beta))
            })
            .collect();
        Ok(Self { directions })
    }

    pub fn from_directions(directions: Vec<(f64, f64)>) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::Empty("direction grid needs at least one direction".into()));
        }
        for &(alpha, beta) in &directions {
            if !(alpha.is_finite() && (0.0..=PI).contains(&beta)) {
                return Err(Error::Domain(format!("invalid direction ({alpha}, {beta})")));
            }
        }
        Ok(Self { directions })
    }

    pub fn directions(&self) -> &[(f64, f64)] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

impl Default for DirectionGrid {
    fn default() -> Self {
        Self::equiangular(Self::DEFAULT_AZIMUTH, Self::DEFAULT_POLAR).expect("non-empty default grid")
    }
}

/// `Y_{l,m}` at every grid direction, one row per direction and one column per `(l, m)`.
#[derive(Debug, Clone)]
pub struct HarmonicGrid {
    grid: DirectionGrid,
    lmax: usize,
    matrix: DMatrix<Complex64>,
}

impl HarmonicGrid {
    pub fn new(grid: &DirectionGrid, lmax: usize) -> Self {
        let cols = (lmax + 1) * (lmax + 1);
        let mut matrix = DMatrix::zeros(grid.len(), cols);
        for (i, &(alpha, beta)) in grid.directions().iter().enumerate() {
            let table = HarmonicTable::new(lmax, alpha, beta);
            for l in 0..=lmax {
                let li = l as i64;
                for m in -li..=li {
                    matrix[(i, lm_index(l, m))] = table.get(l, m);
                }
            }
        }
        Self { grid: grid.clone(), lmax, matrix }
    }

    pub fn grid(&self) -> &DirectionGrid {
        &self.grid
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `H s` for a dense `(l, m)` vector `s` of degree up to `lmax` (shorter vectors are zero-padded).
    pub fn contract(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut s = DVector::zeros(self.matrix.ncols());
        s.rows_mut(0, coeffs.len()).copy_from_slice(coeffs);
        (&self.matrix * s).as_slice().to_vec()
    }
}
