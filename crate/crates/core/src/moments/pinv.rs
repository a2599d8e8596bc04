//! Iterative Moore–Penrose pseudo-inverse.
//!
//! The third-order hyperpower iteration `V_{k+1} = V_k (3I - A V_k (3I - A V_k))` started
//! from `V_0 = α A^T` keeps every iterate of the form `V_k = M_k A^T`. Substituting gives
//! `M_{k+1} = 3M - 3 M G M + M G M G M` with `G = A^T A`, so the iteration runs on
//! `d × d` matrices regardless of the number of rows of `A`. Both forms are provided;
//! they agree to roundoff.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed step size of the default configuration.
pub const DEFAULT_ALPHA: f64 = 0.001;
/// Power-iteration steps used to estimate `ρ(A A^T)` for the bound check.
pub const SPECTRAL_CHECK_ITERS: usize = 10;
const STABLE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alpha {
    /// Fixed step; rejected when it violates `0 < α < 2/ρ(AA^T)`.
    Fixed(f64),
    /// `α = 1/ρ̂` from a power-iteration estimate of the spectral radius.
    Auto,
}

impl std::str::FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Alpha::Auto);
        }
        s.parse::<f64>()
            .ok()
            .filter(|a| *a > 0.0 && a.is_finite())
            .map(Alpha::Fixed)
            .ok_or_else(|| Error::Config(format!("alpha must be 'auto' or a positive number, got '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinvConfig {
    pub alpha: Alpha,
    pub iters: usize,
}

impl PinvConfig {
    /// Offline fitting: accuracy dominates.
    pub const fn offline() -> Self {
        Self { alpha: Alpha::Fixed(DEFAULT_ALPHA), iters: 30 }
    }

    /// Offline fitting with the step scaled to the data.
    pub const fn offline_auto() -> Self {
        Self { alpha: Alpha::Auto, iters: 30 }
    }

    /// Three iterations, as used inside the differentiable pipeline.
    pub const fn in_network() -> Self {
        Self { alpha: Alpha::Auto, iters: 3 }
    }
}

impl Default for PinvConfig {
    fn default() -> Self {
        Self::offline()
    }
}

/// Power-iteration estimate of the largest eigenvalue of a symmetric PSD matrix.
pub fn spectral_radius_estimate(gram: &DMatrix<f64>, iters: usize) -> f64 {
    let n = gram.nrows();
    if n == 0 {
        return 0.0;
    }
    // deterministic start with generic overlap
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.754_877_666).sin());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..iters.max(1) {
        let w = gram * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = v.dot(&w);
        v = w / norm;
    }
    let w = gram * &v;
    lambda.max(v.dot(&w))
}

/// Resolves the step size against the Gram matrix `A^T A` (same spectrum as `A A^T`).
pub fn resolve_alpha(alpha: Alpha, gram: &DMatrix<f64>) -> Result<f64> {
    match alpha {
        Alpha::Fixed(a) => {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::AlphaBound { alpha: a, bound: f64::NAN });
            }
            let rho = spectral_radius_estimate(gram, SPECTRAL_CHECK_ITERS);
            let bound = if rho > 0.0 { 2.0 / rho } else { f64::INFINITY };
            if a >= bound {
                return Err(Error::AlphaBound { alpha: a, bound });
            }
            Ok(a)
        }
        Alpha::Auto => {
            let rho = spectral_radius_estimate(gram, 3 * SPECTRAL_CHECK_ITERS);
            Ok(if rho > 0.0 { 1.0 / rho } else { 1.0 })
        }
    }
}

/// Gram-space Newton–Schulz state: the current iterate is `M_k A^T`.
#[derive(Debug, Clone)]
pub struct NewtonSchulz {
    gram: DMatrix<f64>,
    m: DMatrix<f64>,
    alpha: f64,
    steps: usize,
}

impl NewtonSchulz {
    pub fn new(a: &DMatrix<f64>, alpha: Alpha) -> Result<Self> {
        Self::from_gram(a.tr_mul(a), alpha)
    }

    pub fn from_gram(gram: DMatrix<f64>, alpha: Alpha) -> Result<Self> {
        if gram.nrows() != gram.ncols() {
            return Err(Error::Shape("Gram matrix must be square".into()));
        }
        let alpha = resolve_alpha(alpha, &gram)?;
        let m = DMatrix::identity(gram.nrows(), gram.ncols()) * alpha;
        Ok(Self { gram, m, alpha, steps: 0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step(&mut self) {
        let gm = &self.gram * &self.m;
        let mgm = &self.m * &gm;
        let mgmgm = &mgm * &gm;
        self.m = &self.m * 3.0 - mgm * 3.0 + mgmgm;
        self.steps += 1;
    }

    pub fn run(mut self, iters: usize) -> Self {
        for _ in 0..iters {
            self.step();
        }
        self
    }

    /// `‖G M G − G‖_F / ‖G‖_F` with `G = AᵀA`: the Penrose residual measured in Gram space.
    pub fn gram_residual(&self) -> f64 {
        let norm = self.gram.norm();
        if norm == 0.0 {
            return 0.0;
        }
        (&self.gram * &self.m * &self.gram - &self.gram).norm() / norm
    }

    /// At most `iters` steps, keeping the iterate with the smallest Gram residual. Once that
    /// residual is below `1e-6`, the first step that fails to improve it ends the run: later
    /// steps only amplify directions at the rounding floor.
    pub fn run_stable(mut self, iters: usize) -> Self {
        let mut best = (self.gram_residual(), self.m.clone(), self.steps);
        for _ in 0..iters {
            self.step();
            let r = self.gram_residual();
            if r < best.0 {
                best = (r, self.m.clone(), self.steps);
            } else if best.0 < STABLE_FLOOR {
                break;
            }
        }
        self.m = best.1;
        self.steps = best.2;
        self
    }

    /// `M_k`, so that `A^+ ≈ M_k A^T` and `A^+ y ≈ M_k (A^T y)`.
    pub fn gram_factor(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn pinv(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        &self.m * a.transpose()
    }
}

/// Approximate `A^+` after `iters` Newton–Schulz steps from `V_0 = α A^T`.
pub fn pinv_newton_schulz(a: &DMatrix<f64>, alpha: f64, iters: usize) -> Result<DMatrix<f64>> {
    let ns = NewtonSchulz::new(a, Alpha::Fixed(alpha))?.run(iters);
    Ok(ns.pinv(a))
}

/// Textbook form of the same iteration on `V` directly (`rows(A)` sized products).
pub fn pinv_newton_schulz_direct(a: &DMatrix<f64>, alpha: f64, iters: usize) -> DMatrix<f64> {
    let rows = a.nrows();
    let eye = DMatrix::<f64>::identity(rows, rows);
    let mut v = a.transpose() * alpha;
    for _ in 0..iters {
        let av = a * &v;
        let inner = &eye * 3.0 - &av;
        let outer = &eye * 3.0 - &av * inner;
        v = &v * outer;
    }
    v
}

/// `‖A X A − A‖_F / ‖A‖_F`.
pub fn pinv_residual(a: &DMatrix<f64>, pinv: &DMatrix<f64>) -> f64 {
    let norm = a.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (a * pinv * a - a).norm() / norm
}
