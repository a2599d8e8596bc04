//! Volumetric convolution with axially symmetric kernels.
//!
//! For a ball function `f` and a kernel `g` symmetric about the north pole, the inner
//! product of `f` with `g` rotated so that its pole points towards `(alpha, beta)` is
//!
//! ```text
//! (f * g)(alpha, beta) = c_norm Σ_{n,l,m} sqrt(4π/(2l+1)) Ω_{n,l,m}(f) Ω_{n,l,0}(g) Y_{l,m}(alpha, beta)
//! ```
//!
//! The `sqrt(4π/(2l+1))` factor comes from the spherical-harmonic addition theorem, the
//! same factor that appears in the spherical convolution theorem.

mod grid;
mod kernel;
mod shells;
pub mod spherical;

pub use grid::{DirectionGrid, HarmonicGrid};
pub use kernel::{zonal_mask, Kernel};
pub use shells::{
    build_shell_operators, conv_b3, local_shell_samples, B3Options, ShellDecomposition, ShellFrame, ShellOperators,
    SHELL_OPERATOR_SAMPLES, SHELL_OPERATOR_SEED,
};

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{norm_constant, ComplexMomentSet, MomentLayout};

/// Imaginary residue tolerated in a response before it is reported as an error.
pub const IMAG_TOLERANCE: f64 = 1e-10;

/// Index of `(l, m)` in a dense `(lmax + 1)^2` harmonic vector.
pub fn lm_index(l: usize, m: i64) -> usize {
    l * l + (l as i64 + m) as usize
}

/// Per-frequency response `S_{l,m} = Σ_n Ω_{n,l,m}(f) Ω_{n,l,0}(g)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResponse {
    lmax: usize,
    values: Vec<Complex64>,
}

impl SpectralResponse {
    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        self.values[lm_index(l, m)]
    }

    /// `c_norm Σ sqrt(4π/(2l+1)) S_{l,m} Y_{l,m}` at every grid direction, as complex values.
    pub fn expand_complex(&self, harmonics: &HarmonicGrid) -> Result<Vec<Complex64>> {
        if harmonics.lmax() < self.lmax {
            return Err(Error::Shape(format!("harmonic grid lmax {} < {}", harmonics.lmax(), self.lmax)));
        }
        let scaled: Vec<Complex64> = (0..=self.lmax)
            .flat_map(|l| {
                let s = norm_constant() * (4.0 * std::f64::consts::PI / (2 * l + 1) as f64).sqrt();
                let li = l as i64;
                (-li..=li).map(move |m| (l, m, s))
            })
            .map(|(l, m, s)| self.get(l, m) * s)
            .collect();
        Ok(harmonics.contract(&scaled))
    }

    /// Real response on the grid; fails if the imaginary residue exceeds [`IMAG_TOLERANCE`].
    pub fn expand(&self, harmonics: &HarmonicGrid) -> Result<Vec<f64>> {
        real_part_checked(self.expand_complex(harmonics)?)
    }
}

fn real_part_checked(values: Vec<Complex64>) -> Result<Vec<f64>> {
    let scale = values.iter().map(|v| v.re.abs()).fold(1.0, f64::max);
    let worst = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if worst > IMAG_TOLERANCE * scale {
        return Err(Error::ComplexResponse(worst));
    }
    Ok(values.into_iter().map(|v| v.re).collect())
}

pub fn spectral_response(f: &ComplexMomentSet, g: &Kernel) -> Result<SpectralResponse> {
    f.ensure_order(g.order())?;
    let layout = MomentLayout::new(f.order());
    let lmax = f.order();
    let mut values = vec![Complex64::new(0.0, 0.0); (lmax + 1) * (lmax + 1)];
    for (e, omega) in layout.complex_entries().iter().zip(f.values()) {
        let gz = g.zonal(&layout, e.n, e.l);
        if gz != 0.0 {
            values[lm_index(e.l, e.m)] += omega * gz;
        }
    }
    Ok(SpectralResponse { lmax, values })
}

/// Convolution response over the sphere of rotation axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseMapS2 {
    pub grid: DirectionGrid,
    pub values: Vec<f64>,
}

impl ResponseMapS2 {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_response_csv(out, &self.grid, std::iter::once((0usize, self.values.as_slice())))
    }
}

/// Convolution response over directions and radial shells; `slices[k]` belongs to shell `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseMapB3 {
    pub grid: DirectionGrid,
    pub slices: Vec<Vec<f64>>,
    /// Shells that contained no samples and were filled with zeros.
    pub empty_shells: Vec<usize>,
}

impl ResponseMapB3 {
    pub fn n_shells(&self) -> usize {
        self.slices.len()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_response_csv(out, &self.grid, self.slices.iter().enumerate().map(|(k, s)| (k, s.as_slice())))
    }
}

fn write_response_csv<'a, W: Write>(
    mut out: W,
    grid: &DirectionGrid,
    slices: impl Iterator<Item = (usize, &'a [f64])>,
) -> Result<()> {
    writeln!(out, "alpha,beta,shell,value")?;
    for (k, values) in slices {
        for (&(alpha, beta), v) in grid.directions().iter().zip(values) {
            writeln!(out, "{alpha},{beta},{k},{v}")?;
        }
    }
    Ok(())
}

/// Response of `f` to every rotation of `g` on the grid directions.
pub fn conv_s2(f: &ComplexMomentSet, g: &Kernel, grid: &DirectionGrid) -> Result<ResponseMapS2> {
    let harmonics = HarmonicGrid::new(grid, f.order());
    conv_s2_with(f, g, &harmonics)
}

/// [`conv_s2`] with a precomputed harmonic matrix.
pub fn conv_s2_with(f: &ComplexMomentSet, g: &Kernel, harmonics: &HarmonicGrid) -> Result<ResponseMapS2> {
    let values = spectral_response(f, g)?.expand(harmonics)?;
    Ok(ResponseMapS2 { grid: harmonics.grid().clone(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{real_to_complex, MomentVector};

    fn constant_moments(order: usize) -> (ComplexMomentSet, Kernel) {
        let layout = MomentLayout::new(order);
        let mut c = MomentVector::zeros(order);
        c.set_a(&layout, 0, 0, 0, 1.0).unwrap();
        (real_to_complex(&c), Kernel::new(c).unwrap())
    }

    #[test]
    fn lm_index_is_dense() {
        let mut seen = Vec::new();
        for l in 0..4usize {
            for m in -(l as i64)..=l as i64 {
                seen.push(lm_index(l, m));
            }
        }
        assert_eq!(seen, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn constant_functions_give_constant_response() {
        let (f, g) = constant_moments(6);
        let map = conv_s2(&f, &g, &DirectionGrid::default()).unwrap();
        for v in &map.values {
            assert!((v - norm_constant()).abs() < 1e-14);
        }
        let s = spectral_response(&f, &g).unwrap();
        assert_eq!(s.get(0, 0), Complex64::new(1.0, 0.0));
        assert!(s.values()[1..].iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn zero_kernel_gives_zero_map() {
        let (f, _) = constant_moments(4);
        let g = Kernel::new(MomentVector::zeros(4)).unwrap();
        let map = conv_s2(&f, &g, &DirectionGrid::default()).unwrap();
        assert!(map.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn order_mismatch_is_rejected() {
        let (f, _) = constant_moments(4);
        let g = Kernel::new(MomentVector::zeros(6)).unwrap();
        assert!(matches!(conv_s2(&f, &g, &DirectionGrid::default()), Err(Error::LayoutMismatch { .. })));
    }

    #[test]
    fn csv_has_header_and_one_row_per_direction() {
        let (f, g) = constant_moments(2);
        let grid = DirectionGrid::equiangular(4, 2).unwrap();
        let map = conv_s2(&f, &g, &grid).unwrap();
        let mut buf = Vec::new();
        map.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert_eq!(text.lines().next().unwrap(), "alpha,beta,shell,value");
    }
}
