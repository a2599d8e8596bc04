use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{MomentLayout, MomentVector};

/// Kernel symmetric about the north pole: only the `A_{n,l,0}` coefficients may be non-zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    base: MomentVector,
    mask: Vec<bool>,
}

/// `true` at the coefficient positions an axially symmetric kernel may occupy.
pub fn zonal_mask(layout: &MomentLayout) -> Vec<bool> {
    let mut mask = vec![false; layout.dim()];
    for i in layout.zonal_positions() {
        mask[i] = true;
    }
    mask
}

impl Kernel {
    /// Rejects coefficient vectors with content outside the zonal mask.
    pub fn new(base: MomentVector) -> Result<Self> {
        let mask = zonal_mask(&base.layout());
        if base.coeffs().iter().zip(&mask).any(|(c, keep)| !keep && *c != 0.0) {
            return Err(Error::UnmaskedKernel);
        }
        Ok(Self { base, mask })
    }

    /// Zeroes everything outside the mask.
    pub fn project(base: &MomentVector) -> Self {
        let mask = zonal_mask(&base.layout());
        let coeffs = base.coeffs().iter().zip(&mask).map(|(c, keep)| if *keep { *c } else { 0.0 }).collect();
        let base = MomentVector::from_coeffs(base.order(), coeffs).expect("masked vector is valid");
        Self { base, mask }
    }

    /// Kernel from its zonal coefficients `A_{n,l,0}`, in layout order.
    pub fn from_zonal(order: usize, zonal: &[f64]) -> Result<Self> {
        let layout = MomentLayout::new(order);
        let positions = layout.zonal_positions();
        if zonal.len() != positions.len() {
            return Err(Error::Shape(format!("{} zonal coefficients for {} slots", zonal.len(), positions.len())));
        }
        let mut c = vec![0.0; layout.dim()];
        for (p, v) in positions.iter().zip(zonal) {
            c[*p] = *v;
        }
        Self::new(MomentVector::from_coeffs(order, c)?)
    }

    pub fn order(&self) -> usize {
        self.base.order()
    }

    pub fn base(&self) -> &MomentVector {
        &self.base
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// `A_{n,l,0}`, or zero when `(n, l)` is outside the layout.
    pub fn zonal(&self, layout: &MomentLayout, n: usize, l: usize) -> f64 {
        self.base.a(layout, n, l, 0).unwrap_or(0.0)
    }
}
