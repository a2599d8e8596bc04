//! Radial shells: convolution over directions and radial translations (B³ responses).

use std::collections::HashMap;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{conv_s2_with, DirectionGrid, HarmonicGrid, Kernel, ResponseMapB3};
use crate::error::{Error, Result};
use crate::geometry::uniform_ball_points;
use crate::moments::{real_to_complex, MomentFitter, MomentLayout, MomentVector, NewtonSchulz, PinvConfig, SampleSet};
use crate::special::{BallPoint, ZernikeBasis, ZernikeIndex};

/// Sample count of the dense ball sample used to fit translated kernels.
pub const SHELL_OPERATOR_SAMPLES: usize = 8192;
/// Seed of that sample; operators are a deterministic function of `(order, n_shells)`.
pub const SHELL_OPERATOR_SEED: u64 = 0x5EED_5E11;

/// Frame in which a shell-restricted function meets the kernel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShellFrame {
    /// Samples of shell `k` are moved to `u = (r - q_k) · n_shells` and convolved with the
    /// base kernel, which thereby spans one shell width. Every shell uses the same map, so a
    /// one-shell shift of a pattern permutes the response slices exactly.
    #[default]
    Local,
    /// Shell moments are fitted in place and the kernel is moved by the fitted
    /// translation operator `T_k`.
    Global,
}

impl FromStr for ShellFrame {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(Self::Local),
            "global" => Ok(Self::Global),
            _ => Err(Error::Config(format!("shell frame must be 'local' or 'global', got '{s}'"))),
        }
    }
}

/// Partition of `[0, 1]` into `n_shells` intervals `[k/n, (k+1)/n)`; the last one includes 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShellDecomposition {
    n_shells: usize,
}

impl ShellDecomposition {
    pub const DEFAULT_SHELLS: usize = 10;

    pub fn new(n_shells: usize) -> Result<Self> {
        if n_shells == 0 {
            return Err(Error::Config("at least one shell is required".into()));
        }
        Ok(Self { n_shells })
    }

    pub fn n_shells(&self) -> usize {
        self.n_shells
    }

    /// `q_k = k / n_shells`.
    pub fn boundary(&self, k: usize) -> f64 {
        k as f64 / self.n_shells as f64
    }

    pub fn shell_of(&self, r: f64) -> usize {
        ((r * self.n_shells as f64).floor().max(0.0) as usize).min(self.n_shells - 1)
    }

    /// Sample indices of every shell.
    pub fn assign(&self, points: &[BallPoint]) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_shells];
        for (i, p) in points.iter().enumerate() {
            out[self.shell_of(p.r)].push(i);
        }
        out
    }
}

impl Default for ShellDecomposition {
    fn default() -> Self {
        Self { n_shells: Self::DEFAULT_SHELLS }
    }
}

/// Samples of one shell with radii `(r - q_k) · n_shells`, stretching the shell over `[0, 1]`.
pub fn local_shell_samples(samples: &SampleSet, shells: &ShellDecomposition, k: usize, indices: &[usize]) -> SampleSet {
    let q = shells.boundary(k);
    let points = indices
        .iter()
        .map(|&i| {
            let p = samples.points()[i];
            let u = (p.r - q) * shells.n_shells() as f64;
            BallPoint::new_unchecked(p.theta, p.phi, u.clamp(0.0, 1.0))
        })
        .collect();
    let values = indices.iter().map(|&i| samples.values()[i]).collect();
    SampleSet::from_parts_unchecked(points, values, None)
}

/// Per-shell linear maps taking base-kernel coefficients to the coefficients of the kernel
/// translated outwards by `q_k`, truncated to zero where `r - q_k` leaves `[0, 1]`.
#[derive(Debug, Clone)]
pub struct ShellOperators {
    order: usize,
    shells: ShellDecomposition,
    ops: Vec<DMatrix<f64>>,
}

impl ShellOperators {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn shells(&self) -> &ShellDecomposition {
        &self.shells
    }

    pub fn matrix(&self, k: usize) -> &DMatrix<f64> {
        &self.ops[k]
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.ops
    }

    pub fn apply(&self, k: usize, g: &Kernel) -> Result<Kernel> {
        if g.order() != self.order {
            return Err(Error::LayoutMismatch {
                expected: format!("order {}", self.order),
                found: format!("order {}", g.order()),
            });
        }
        let c = &self.ops[k] * nalgebra::DVector::from_column_slice(g.base().coeffs());
        Kernel::new(MomentVector::from_coeffs(self.order, c.as_slice().to_vec())?)
    }
}

fn compute_shell_operators(order: usize, shells: ShellDecomposition) -> Result<ShellOperators> {
    let layout = MomentLayout::new(order);
    let mut rng = ChaCha8Rng::seed_from_u64(SHELL_OPERATOR_SEED);
    let points = uniform_ball_points(&mut rng, SHELL_OPERATOR_SAMPLES);
    let basis = ZernikeBasis::new(order);
    let x = crate::moments::design_matrix_with(&basis, &layout, &points)?.into_matrix();
    let ns = NewtonSchulz::new(&x, PinvConfig::offline_auto().alpha)?.run_stable(PinvConfig::offline_auto().iters);
    let zonal = layout.zonal_positions();
    let mut ops = Vec::with_capacity(shells.n_shells());
    for k in 0..shells.n_shells() {
        let q = shells.boundary(k);
        let targets = DMatrix::from_fn(points.len(), zonal.len(), |i, j| {
            let e = layout.entries()[zonal[j]];
            let r = points[i].r - q;
            if (0.0..=1.0).contains(&r) {
                let idx = ZernikeIndex { n: e.n, l: e.l, m: 0 };
                basis.eval(idx, BallPoint::new_unchecked(points[i].theta, points[i].phi, r)).re
            } else {
                0.0
            }
        });
        let fitted = ns.gram_factor() * (x.transpose() * targets);
        let mut t = DMatrix::zeros(layout.dim(), layout.dim());
        for (j, &col) in zonal.iter().enumerate() {
            for &row in &zonal {
                t[(row, col)] = fitted[(row, j)];
            }
        }
        ops.push(t);
    }
    Ok(ShellOperators { order, shells, ops })
}

type OperatorCache = Mutex<HashMap<(usize, usize), Arc<ShellOperators>>>;

/// Translation operators for a layout order and shell count, built once and cached.
pub fn build_shell_operators(order: usize, shells: &ShellDecomposition) -> Result<Arc<ShellOperators>> {
    static CACHE: OnceLock<OperatorCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (order, shells.n_shells());
    if let Some(ops) = cache.lock().expect("cache lock").get(&key) {
        return Ok(Arc::clone(ops));
    }
    let ops = Arc::new(compute_shell_operators(order, *shells)?);
    Ok(Arc::clone(cache.lock().expect("cache lock").entry(key).or_insert(ops)))
}

/// Options for [`conv_b3`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct B3Options {
    pub frame: ShellFrame,
    pub pinv: PinvConfig,
}

impl Default for B3Options {
    fn default() -> Self {
        Self { frame: ShellFrame::Local, pinv: PinvConfig::offline_auto() }
    }
}

/// Shell-wise convolution: slice `k` is the response of the samples in shell `k` to the
/// kernel translated by `q_k`. Empty shells give zero slices.
pub fn conv_b3(
    samples: &SampleSet,
    g: &Kernel,
    grid: &DirectionGrid,
    shells: &ShellDecomposition,
    options: &B3Options,
) -> Result<ResponseMapB3> {
    let order = g.order();
    let harmonics = HarmonicGrid::new(grid, order);
    let fitter = MomentFitter::new(order, options.pinv);
    let operators = match options.frame {
        ShellFrame::Global => Some(build_shell_operators(order, shells)?),
        ShellFrame::Local => None,
    };
    let mut slices = Vec::with_capacity(shells.n_shells());
    let mut empty_shells = Vec::new();
    for (k, indices) in shells.assign(samples.points()).iter().enumerate() {
        if indices.is_empty() {
            empty_shells.push(k);
            slices.push(vec![0.0; grid.len()]);
            continue;
        }
        let (shell_samples, kernel) = match &operators {
            None => (local_shell_samples(samples, shells, k, indices), g.clone()),
            Some(ops) => (samples.subset(indices), ops.apply(k, g)?),
        };
        let c = fitter.fit(&shell_samples)?;
        slices.push(conv_s2_with(&real_to_complex(&c), &kernel, &harmonics)?.values);
    }
    Ok(ResponseMapB3 { grid: grid.clone(), slices, empty_shells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shells_partition_the_unit_interval() {
        let s = ShellDecomposition::new(10).unwrap();
        assert_eq!(s.shell_of(0.0), 0);
        assert_eq!(s.shell_of(0.35), 3);
        assert_eq!(s.shell_of(1.0), 9);
        assert_eq!(s.shell_of(0.999), 9);
        assert!(ShellDecomposition::new(0).is_err());
        let pts: Vec<_> = [0.05, 0.15, 0.95, 1.0].iter().map(|&r| BallPoint::new_unchecked(0.0, 0.0, r)).collect();
        let a = s.assign(&pts);
        assert_eq!(a.iter().map(Vec::len).sum::<usize>(), 4);
        assert_eq!(a[9], vec![2, 3]);
    }

    #[test]
    fn zero_shift_operator_is_identity_on_mask() {
        let shells = ShellDecomposition::new(10).unwrap();
        let ops = build_shell_operators(6, &shells).unwrap();
        let layout = MomentLayout::new(6);
        let t0 = ops.matrix(0);
        for i in 0..layout.dim() {
            for j in 0..layout.dim() {
                let masked = j < layout.len() && layout.entries()[j].m == 0;
                let expected = if i == j && masked { 1.0 } else { 0.0 };
                assert!((t0[(i, j)] - expected).abs() < 1e-4, "T0[{i},{j}] = {}", t0[(i, j)]);
            }
        }
        assert!(Arc::ptr_eq(&ops, &build_shell_operators(6, &shells).unwrap()));
    }

    #[test]
    fn frame_parsing() {
        assert_eq!("local".parse::<ShellFrame>().unwrap(), ShellFrame::Local);
        assert_eq!("global".parse::<ShellFrame>().unwrap(), ShellFrame::Global);
        assert!("other".parse::<ShellFrame>().is_err());
    }
}
