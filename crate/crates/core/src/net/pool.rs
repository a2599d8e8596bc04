//! Adaptive weighted frequency pooling.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outer product `Ω = f g^T` of a shape and a kernel coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMap {
    omega: DMatrix<f64>,
}

impl FrequencyMap {
    pub fn outer(f: &[f64], g: &[f64]) -> Self {
        Self { omega: DVector::from_column_slice(f) * DVector::from_column_slice(g).transpose() }
    }

    pub fn from_matrix(omega: DMatrix<f64>) -> Self {
        Self { omega }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.omega
    }
}

/// Trainable pooling weights `W1`, `W2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolWeights {
    pub w1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
}

impl PoolWeights {
    pub fn random<R: Rng + ?Sized>(dim: usize, std: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, std).expect("finite std");
        Self {
            w1: DMatrix::from_fn(dim, dim, |_, _| normal.sample(rng)),
            w2: DMatrix::from_fn(dim, dim, |_, _| normal.sample(rng)),
        }
    }

    pub fn ones(dim: usize) -> Self {
        Self { w1: DMatrix::from_element(dim, dim, 1.0), w2: DMatrix::from_element(dim, dim, 1.0) }
    }
}

/// `v1 = (Ω ∘ W1) u^T` (row sums) and `v2 = ((Ω ∘ W2)^T u^T)` (column sums).
pub fn pool(map: &FrequencyMap, w: &PoolWeights) -> Result<(DVector<f64>, DVector<f64>)> {
    let omega = map.matrix();
    if omega.shape() != w.w1.shape() || omega.shape() != w.w2.shape() {
        return Err(Error::Shape(format!("frequency map {:?} vs weights {:?}", omega.shape(), w.w1.shape())));
    }
    let f1 = omega.component_mul(&w.w1);
    let f2 = omega.component_mul(&w.w2);
    let v1 = DVector::from_fn(omega.nrows(), |i, _| f1.row(i).sum());
    let v2 = DVector::from_fn(omega.ncols(), |j, _| f2.column(j).sum());
    Ok((v1, v2))
}

/// [`pool`] for a rank-one map without forming it: `v1 = f ∘ (W1 g)`, `v2 = g ∘ (W2^T f)`.
pub fn pool_rank_one(f: &DVector<f64>, g: &DVector<f64>, w: &PoolWeights) -> (DVector<f64>, DVector<f64>) {
    let v1 = f.component_mul(&(&w.w1 * g));
    let v2 = g.component_mul(&w.w2.tr_mul(f));
    (v1, v2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ones_weights_give_row_and_column_sums() {
        let f = [1.0, 2.0, 3.0];
        let g = [0.5, -1.0, 4.0];
        let (v1, v2) = pool(&FrequencyMap::outer(&f, &g), &PoolWeights::ones(3)).unwrap();
        let (sf, sg): (f64, f64) = (f.iter().sum(), g.iter().sum());
        for i in 0..3 {
            assert_eq!(v1[i], f[i] * sg);
            assert_eq!(v2[i], g[i] * sf);
        }
    }

    #[test]
    fn zero_map_pools_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = PoolWeights::random(4, 0.5, &mut rng);
        let (v1, v2) = pool(&FrequencyMap::from_matrix(DMatrix::zeros(4, 4)), &w).unwrap();
        assert!(v1.iter().chain(v2.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn matches_triple_loop_and_rank_one_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = PoolWeights::random(6, 0.5, &mut rng);
        let f = DVector::from_fn(6, |i, _| (i as f64).sin());
        let g = DVector::from_fn(6, |i, _| (i as f64 * 0.7).cos());
        let map = FrequencyMap::outer(f.as_slice(), g.as_slice());
        let (v1, v2) = pool(&map, &w).unwrap();
        let (r1, r2) = pool_rank_one(&f, &g, &w);
        for i in 0..6 {
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for j in 0..6 {
                s1 += map.matrix()[(i, j)] * w.w1[(i, j)];
                s2 += map.matrix()[(j, i)] * w.w2[(j, i)];
            }
            assert!((v1[i] - s1).abs() < 1e-12 && (v2[i] - s2).abs() < 1e-12);
            assert!((v1[i] - r1[i]).abs() < 1e-12 && (v2[i] - r2[i]).abs() < 1e-12);
        }
        assert!(pool(&map, &PoolWeights::ones(5)).is_err());
    }
}
