use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{BallPoint, ZernikeIndex, RADIUS_TOLERANCE};

/// Version tag of the coefficient ordering written into moment and checkpoint files.
pub const LAYOUT_VERSION: u32 = 1;

/// Canonical ordering of the real `(A, B)` coefficients.
///
/// `entries` holds every `(n, l, m)` with `0 <= m <= l <= n <= order` and `n - l` even,
/// sorted lexicographically. The real coefficient vector is the `A` block followed by the
/// `B` block, each indexed like `entries`. The complex view additionally covers negative
/// orders, also sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentLayout {
    order: usize,
    entries: Vec<ZernikeIndex>,
    complex_entries: Vec<ZernikeIndex>,
}

impl MomentLayout {
    pub fn new(order: usize) -> Self {
        let mut entries = Vec::new();
        let mut complex_entries = Vec::new();
        for n in 0..=order {
            for l in (n % 2..=n).step_by(2) {
                let li = l as i64;
                for m in -li..=li {
                    let idx = ZernikeIndex { n, l, m };
                    if m >= 0 {
                        entries.push(idx);
                    }
                    complex_entries.push(idx);
                }
            }
        }
        Self { order, entries, complex_entries }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entries(&self) -> &[ZernikeIndex] {
        &self.entries
    }

    pub fn complex_entries(&self) -> &[ZernikeIndex] {
        &self.complex_entries
    }

    /// Number of `(n, l, m >= 0)` entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Length of the real coefficient vector `c = (a, b)`.
    pub fn dim(&self) -> usize {
        2 * self.entries.len()
    }

    pub fn position(&self, n: usize, l: usize, m: i64) -> Option<usize> {
        self.entries.binary_search(&ZernikeIndex { n, l, m }).ok()
    }

    pub fn complex_position(&self, n: usize, l: usize, m: i64) -> Option<usize> {
        self.complex_entries.binary_search(&ZernikeIndex { n, l, m }).ok()
    }

    /// Positions (in the `A` block) of the axially symmetric `m = 0` entries.
    pub fn zonal_positions(&self) -> Vec<usize> {
        self.entries.iter().enumerate().filter(|(_, e)| e.m == 0).map(|(i, _)| i).collect()
    }

    fn check_order(&self, order: usize) -> Result<()> {
        if order != self.order {
            return Err(Error::LayoutMismatch {
                expected: format!("order {}", self.order),
                found: format!("order {order}"),
            });
        }
        Ok(())
    }
}

/// Real coefficient vector `c = (a^T, b^T)^T` in a [`MomentLayout`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    order: usize,
    coeffs: Vec<f64>,
}

impl MomentVector {
    pub fn zeros(order: usize) -> Self {
        Self { order, coeffs: vec![0.0; MomentLayout::new(order).dim()] }
    }

    /// Validates the length and that `B_{n,l,0}` entries are exactly zero.
    pub fn from_coeffs(order: usize, coeffs: Vec<f64>) -> Result<Self> {
        let layout = MomentLayout::new(order);
        if coeffs.len() != layout.dim() {
            return Err(Error::LayoutMismatch {
                expected: format!("{} coefficients", layout.dim()),
                found: format!("{} coefficients", coeffs.len()),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite moment coefficient".into()));
        }
        for i in layout.zonal_positions() {
            if coeffs[layout.len() + i] != 0.0 {
                return Err(Error::Domain(format!(
                    "B coefficient of zonal entry {:?} must be zero",
                    layout.entries()[i]
                )));
            }
        }
        Ok(Self { order, coeffs })
    }

    pub(crate) fn from_coeffs_unchecked(order: usize, coeffs: Vec<f64>) -> Self {
        Self { order, coeffs }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn layout(&self) -> MomentLayout {
        MomentLayout::new(self.order)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn a(&self, layout: &MomentLayout, n: usize, l: usize, m: i64) -> Option<f64> {
        layout.position(n, l, m).map(|i| self.coeffs[i])
    }

    pub fn b(&self, layout: &MomentLayout, n: usize, l: usize, m: i64) -> Option<f64> {
        layout.position(n, l, m).map(|i| self.coeffs[layout.len() + i])
    }

    pub fn set_a(&mut self, layout: &MomentLayout, n: usize, l: usize, m: i64, value: f64) -> Result<()> {
        let i = layout.position(n, l, m).ok_or_else(|| Error::Index(format!("({n}, {l}, {m}) not in layout")))?;
        self.coeffs[i] = value;
        Ok(())
    }

    pub fn set_b(&mut self, layout: &MomentLayout, n: usize, l: usize, m: i64, value: f64) -> Result<()> {
        let i = layout.position(n, l, m).ok_or_else(|| Error::Index(format!("({n}, {l}, {m}) not in layout")))?;
        if m == 0 && value != 0.0 {
            return Err(Error::Domain("B coefficient of a zonal entry must be zero".into()));
        }
        self.coeffs[layout.len() + i] = value;
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Complex moments `Ω_{n,l,m}` for every `-l <= m <= l`, in the layout's complex order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMomentSet {
    order: usize,
    values: Vec<Complex64>,
}

impl ComplexMomentSet {
    pub fn zeros(order: usize) -> Self {
        let len = MomentLayout::new(order).complex_entries().len();
        Self { order, values: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn from_values(order: usize, values: Vec<Complex64>) -> Result<Self> {
        let len = MomentLayout::new(order).complex_entries().len();
        if values.len() != len {
            return Err(Error::LayoutMismatch {
                expected: format!("{len} complex moments"),
                found: format!("{}", values.len()),
            });
        }
        Ok(Self { order, values })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn get(&self, layout: &MomentLayout, n: usize, l: usize, m: i64) -> Option<Complex64> {
        layout.complex_position(n, l, m).map(|i| self.values[i])
    }

    /// `Σ |Ω_{n,l,m}|^2` over all entries.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub(crate) fn ensure_order(&self, order: usize) -> Result<()> {
        MomentLayout::new(self.order).check_order(order)
    }
}

/// Sampled function values on the unit ball, with optional quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    points: Vec<BallPoint>,
    values: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl SampleSet {
    pub fn new(points: Vec<BallPoint>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::Shape(format!("{} points but {} values", points.len(), values.len())));
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.r.is_finite() && p.r <= 1.0 + RADIUS_TOLERANCE && p.r >= 0.0) {
                return Err(Error::Domain(format!("sample {i} has radius {} outside the unit ball", p.r)));
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("sample {i} has a non-finite value")));
        }
        Ok(Self { points, values, weights: None })
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.points.len() {
            return Err(Error::Shape(format!("{} weights for {} points", weights.len(), self.points.len())));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    /// Equal Monte Carlo weights `(4π/3) / K`, valid for points uniform in the ball.
    pub fn with_monte_carlo_weights(self) -> Self {
        let k = self.points.len().max(1) as f64;
        let w = 4.0 * std::f64::consts::PI / 3.0 / k;
        let n = self.points.len();
        Self { weights: Some(vec![w; n]), ..self }
    }

    pub fn points(&self) -> &[BallPoint] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> SampleSet {
        SampleSet {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            values: indices.iter().map(|&i| self.values[i]).collect(),
            weights: self.weights.as_ref().map(|w| indices.iter().map(|&i| w[i]).collect()),
        }
    }

    pub fn map_values(&self, f: impl Fn(&BallPoint, f64) -> f64) -> SampleSet {
        SampleSet {
            points: self.points.clone(),
            values: self.points.iter().zip(&self.values).map(|(p, v)| f(p, *v)).collect(),
            weights: self.weights.clone(),
        }
    }

    pub(crate) fn from_parts_unchecked(points: Vec<BallPoint>, values: Vec<f64>, weights: Option<Vec<f64>>) -> Self {
        Self { points, values, weights }
    }
}
