use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::features::ShapeFeatures;
use super::pool::PoolWeights;
use super::{FeatureMode, PipelineConfig};
use crate::conv::spherical::sh_real_entries;
use crate::conv::{build_shell_operators, zonal_mask, ShellDecomposition, ShellFrame, ShellOperators};
use crate::error::{Error, Result};
use crate::moments::MomentLayout;

/// Trainable parameters. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Base kernel coefficient vectors, one per kernel, zero outside the kernel mask.
    pub kernels: Vec<DVector<f64>>,
    pub pool: PoolWeights,
    pub fc: DMatrix<f64>,
    pub bias: DVector<f64>,
}

pub type Gradients = Params;

impl Params {
    pub fn zeros_like(other: &Params) -> Params {
        Params {
            kernels: other.kernels.iter().map(|k| DVector::zeros(k.len())).collect(),
            pool: PoolWeights {
                w1: DMatrix::zeros(other.pool.w1.nrows(), other.pool.w1.ncols()),
                w2: DMatrix::zeros(other.pool.w2.nrows(), other.pool.w2.ncols()),
            },
            fc: DMatrix::zeros(other.fc.nrows(), other.fc.ncols()),
            bias: DVector::zeros(other.bias.len()),
        }
    }

    /// Flat mutable views of every tensor, in a fixed order.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.kernels.iter_mut().map(|k| k.as_mut_slice()).collect();
        out.push(self.pool.w1.as_mut_slice());
        out.push(self.pool.w2.as_mut_slice());
        out.push(self.fc.as_mut_slice());
        out.push(self.bias.as_mut_slice());
        out
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.kernels.iter().map(|k| k.as_slice()).collect();
        out.push(self.pool.w1.as_slice());
        out.push(self.pool.w2.as_slice());
        out.push(self.fc.as_slice());
        out.push(self.bias.as_slice());
        out
    }
}

/// Fixed structure of the pipeline: configuration, class count, kernel mask and shell operators.
#[derive(Debug, Clone)]
pub struct Model {
    config: PipelineConfig,
    n_classes: usize,
    mask: Vec<bool>,
    operators: Option<Arc<ShellOperators>>,
}

impl Model {
    pub fn new(config: PipelineConfig, n_classes: usize) -> Result<Self> {
        config.validate()?;
        if n_classes == 0 {
            return Err(Error::Config("at least one class is required".into()));
        }
        let mask = match config.mode {
            FeatureMode::Volumetric => zonal_mask(&MomentLayout::new(config.order)),
            FeatureMode::Spherical => {
                let entries = sh_real_entries(config.order);
                let mut m: Vec<bool> = entries.iter().map(|&(_, m)| m == 0).collect();
                m.extend(std::iter::repeat_n(false, entries.len()));
                m
            }
            FeatureMode::AxialSymmetry => Vec::new(),
        };
        let operators = match (config.mode, config.frame) {
            (FeatureMode::Volumetric, ShellFrame::Global) => {
                Some(build_shell_operators(config.order, &ShellDecomposition::new(config.n_shells)?)?)
            }
            _ => None,
        };
        Ok(Self { config, n_classes, mask, operators })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn kernel_mask(&self) -> &[bool] {
        &self.mask
    }

    fn n_kernels(&self) -> usize {
        match self.config.mode {
            FeatureMode::AxialSymmetry => 0,
            _ => self.config.n_kernels,
        }
    }

    /// Kernels and pooling weights from `N(0, init_std)`; the FC layer from
    /// `N(0, sqrt(2 / (fan_in + fan_out)))`; zero bias.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Params {
        let dim = self.config.coeff_dim();
        let normal = Normal::new(0.0, self.config.init_std).expect("validated std");
        let kernels = (0..self.n_kernels())
            .map(|_| {
                let raw = DVector::from_fn(dim, |_, _| normal.sample(rng));
                self.apply_mask(raw)
            })
            .collect();
        let pool = if self.n_kernels() == 0 {
            PoolWeights::ones(0)
        } else {
            PoolWeights::random(dim, self.config.init_std, rng)
        };
        let fan = self.config.fc_inputs();
        let fc_normal = Normal::new(0.0, (2.0 / (fan + self.n_classes) as f64).sqrt()).expect("finite std");
        let fc = DMatrix::from_fn(self.n_classes, fan, |_, _| fc_normal.sample(rng));
        Params { kernels, pool, fc, bias: DVector::zeros(self.n_classes) }
    }

    pub fn zero_params(&self) -> Params {
        let dim = self.config.coeff_dim();
        let pdim = if self.n_kernels() == 0 { 0 } else { dim };
        Params {
            kernels: vec![DVector::zeros(dim); self.n_kernels()],
            pool: PoolWeights { w1: DMatrix::zeros(pdim, pdim), w2: DMatrix::zeros(pdim, pdim) },
            fc: DMatrix::zeros(self.n_classes, self.config.fc_inputs()),
            bias: DVector::zeros(self.n_classes),
        }
    }

    pub fn apply_mask(&self, mut v: DVector<f64>) -> DVector<f64> {
        for (x, keep) in v.iter_mut().zip(&self.mask) {
            if !keep {
                *x = 0.0;
            }
        }
        v
    }

    pub fn check_params(&self, p: &Params) -> Result<()> {
        let dim = self.config.coeff_dim();
        let ok = p.kernels.len() == self.n_kernels()
            && p.kernels.iter().all(|k| k.len() == dim)
            && p.fc.shape() == (self.n_classes, self.config.fc_inputs())
            && p.bias.len() == self.n_classes;
        if !ok {
            return Err(Error::Shape("parameters do not match the pipeline configuration".into()));
        }
        Ok(())
    }

    fn check_features(&self, f: &ShapeFeatures) -> Result<()> {
        let dim = self.config.coeff_dim();
        if f.slots.len() != self.config.slots_per_kernel() || f.slots.iter().any(|s| s.len() != dim) {
            return Err(Error::Shape(format!(
                "expected {} feature slots of length {dim}",
                self.config.slots_per_kernel()
            )));
        }
        Ok(())
    }

    /// Kernel of slot `(j, k)`: the base kernel, or its translation by `T_k` in the global frame.
    fn slot_kernel(&self, g: &DVector<f64>, k: usize) -> DVector<f64> {
        match &self.operators {
            Some(ops) => ops.matrix(k) * g,
            None => g.clone(),
        }
    }

    /// Input of the fully connected layer; slot `s = j · n_slots + k` holds `(v1, v2)`.
    pub fn fc_input(&self, p: &Params, f: &ShapeFeatures) -> Result<DVector<f64>> {
        self.check_params(p)?;
        self.check_features(f)?;
        if self.config.mode == FeatureMode::AxialSymmetry {
            return Ok(DVector::from_column_slice(&f.slots[0]));
        }
        let dim = self.config.coeff_dim();
        let n_slots = self.config.slots_per_kernel();
        let fk: Vec<DVector<f64>> = f.slots.iter().map(|s| DVector::from_column_slice(s)).collect();
        let b: Vec<DVector<f64>> = fk.iter().map(|v| p.pool.w2.tr_mul(v)).collect();
        let mut x = DVector::zeros(self.config.fc_inputs());
        for (j, g) in p.kernels.iter().enumerate() {
            for k in 0..n_slots {
                let gk = self.slot_kernel(g, k);
                let a = &p.pool.w1 * &gk;
                let base = (j * n_slots + k) * 2 * dim;
                x.rows_mut(base, dim).copy_from(&fk[k].component_mul(&a));
                x.rows_mut(base + dim, dim).copy_from(&gk.component_mul(&b[k]));
            }
        }
        Ok(x)
    }

    pub fn logits(&self, p: &Params, f: &ShapeFeatures) -> Result<DVector<f64>> {
        Ok(&p.fc * self.fc_input(p, f)? + &p.bias)
    }

    /// Retrieval descriptor: mean over slots of `(v1, v2)`; the raw features in axial mode.
    pub fn descriptor(&self, p: &Params, f: &ShapeFeatures) -> Result<Vec<f64>> {
        let x = self.fc_input(p, f)?;
        if self.config.mode == FeatureMode::AxialSymmetry {
            return Ok(x.as_slice().to_vec());
        }
        let width = 2 * self.config.coeff_dim();
        let n = x.len() / width;
        let mut out = vec![0.0; width];
        for s in 0..n {
            for (o, v) in out.iter_mut().zip(x.rows(s * width, width).iter()) {
                *o += v;
            }
        }
        Ok(out.into_iter().map(|v| v / n as f64).collect())
    }

    pub fn predict(&self, p: &Params, f: &ShapeFeatures) -> Result<usize> {
        let z = self.logits(p, f)?;
        Ok(z.iter().enumerate().fold(0, |best, (i, v)| if *v > z[best] { i } else { best }))
    }

    /// Mean softmax cross-entropy over the batch and its gradient with respect to every parameter.
    pub fn loss_and_grads(&self, p: &Params, batch: &[(&ShapeFeatures, usize)]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::Empty("empty batch".into()));
        }
        let mut grads = Params::zeros_like(p);
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for &(f, label) in batch {
            if label >= self.n_classes {
                return Err(Error::Index(format!("label {label} out of range for {} classes", self.n_classes)));
            }
            let x = self.fc_input(p, f)?;
            let z = &p.fc * &x + &p.bias;
            let zmax = z.max();
            let exp = z.map(|v| (v - zmax).exp());
            let sum = exp.sum();
            loss += scale * (sum.ln() + zmax - z[label]);
            let mut dz = exp / sum;
            dz[label] -= 1.0;
            dz *= scale;
            grads.bias += &dz;
            grads.fc.ger(1.0, &dz, &x, 1.0);
            if self.config.mode != FeatureMode::AxialSymmetry {
                let dx = p.fc.tr_mul(&dz);
                self.backward_pool(p, f, &dx, &mut grads);
            }
        }
        for g in grads.kernels.iter_mut() {
            *g = self.apply_mask(std::mem::replace(g, DVector::zeros(0)));
        }
        Ok((loss, grads))
    }

    fn backward_pool(&self, p: &Params, f: &ShapeFeatures, dx: &DVector<f64>, grads: &mut Gradients) {
        let dim = self.config.coeff_dim();
        let n_slots = self.config.slots_per_kernel();
        let total = p.kernels.len() * n_slots;
        let fk: Vec<DVector<f64>> = f.slots.iter().map(|s| DVector::from_column_slice(s)).collect();
        let b: Vec<DVector<f64>> = fk.iter().map(|v| p.pool.w2.tr_mul(v)).collect();
        let mut u = DMatrix::zeros(dim, total);
        let mut gmat = DMatrix::zeros(dim, total);
        let mut zmat = DMatrix::zeros(dim, total);
        let mut fmat = DMatrix::zeros(dim, total);
        let mut dgk_direct = DMatrix::zeros(dim, total);
        for (j, g) in p.kernels.iter().enumerate() {
            for k in 0..n_slots {
                let s = j * n_slots + k;
                let gk = self.slot_kernel(g, k);
                let base = s * 2 * dim;
                let dv1 = dx.rows(base, dim);
                let dv2 = dx.rows(base + dim, dim);
                u.set_column(s, &fk[k].component_mul(&dv1));
                zmat.set_column(s, &gk.component_mul(&dv2));
                dgk_direct.set_column(s, &dv2.component_mul(&b[k]));
                gmat.set_column(s, &gk);
                fmat.set_column(s, &fk[k]);
            }
        }
        // v1 = f ∘ (W1 g): dW1 = Σ (dv1 ∘ f) g^T, dg = W1^T (dv1 ∘ f)
        grads.pool.w1.gemm(1.0, &u, &gmat.transpose(), 1.0);
        // v2 = g ∘ (W2^T f): dW2 = Σ f (dv2 ∘ g)^T, dg = dv2 ∘ (W2^T f)
        grads.pool.w2.gemm(1.0, &fmat, &zmat.transpose(), 1.0);
        let dgk = p.pool.w1.tr_mul(&u) + dgk_direct;
        for j in 0..p.kernels.len() {
            for k in 0..n_slots {
                let col = dgk.column(j * n_slots + k);
                match &self.operators {
                    Some(ops) => grads.kernels[j] += ops.matrix(k).tr_mul(&col),
                    None => grads.kernels[j] += col,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config(mode: FeatureMode, frame: ShellFrame) -> PipelineConfig {
        PipelineConfig { order: 2, n_kernels: 3, n_shells: 2, mode, frame, ..Default::default() }
    }

    fn random_features(cfg: &PipelineConfig, rng: &mut ChaCha8Rng) -> ShapeFeatures {
        ShapeFeatures {
            slots: (0..cfg.slots_per_kernel())
                .map(|_| (0..cfg.coeff_dim()).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect(),
        }
    }

    #[test]
    fn zero_params_give_uniform_softmax() {
        let cfg = PipelineConfig::default();
        let model = Model::new(cfg, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_features(&cfg, &mut rng);
        let p = model.zero_params();
        assert!(model.logits(&p, &f).unwrap().iter().all(|&v| v == 0.0));
        let (loss, _) = model.loss_and_grads(&p, &[(&f, 0)]).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn logits_are_linear_in_features() {
        let cfg = small_config(FeatureMode::Volumetric, ShellFrame::Local);
        let model = Model::new(cfg, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = model.init_params(&mut rng);
        p.bias.fill(0.0);
        let f = random_features(&cfg, &mut rng);
        let scaled = ShapeFeatures { slots: f.slots.iter().map(|s| s.iter().map(|v| 2.5 * v).collect()).collect() };
        let a = model.logits(&p, &f).unwrap() * 2.5;
        let b = model.logits(&p, &scaled).unwrap();
        assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn bias_shift_leaves_loss_unchanged() {
        let cfg = small_config(FeatureMode::Volumetric, ShellFrame::Local);
        let model = Model::new(cfg, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = model.init_params(&mut rng);
        let f = random_features(&cfg, &mut rng);
        let (l0, _) = model.loss_and_grads(&p, &[(&f, 1)]).unwrap();
        p.bias.add_scalar_mut(4.0);
        let (l1, _) = model.loss_and_grads(&p, &[(&f, 1)]).unwrap();
        assert!((l0 - l1).abs() < 1e-12);
        assert!(model.loss_and_grads(&p, &[(&f, 3)]).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (mode, frame) in [
            (FeatureMode::Volumetric, ShellFrame::Local),
            (FeatureMode::Volumetric, ShellFrame::Global),
            (FeatureMode::Spherical, ShellFrame::Local),
            (FeatureMode::AxialSymmetry, ShellFrame::Local),
        ] {
            let cfg = PipelineConfig { init_std: 0.3, ..small_config(mode, frame) };
            let model = Model::new(cfg, 3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let p = model.init_params(&mut rng);
            let f1 = random_features(&cfg, &mut rng);
            let f2 = random_features(&cfg, &mut rng);
            let batch = [(&f1, 0usize), (&f2, 2usize)];
            let (_, grads) = model.loss_and_grads(&p, &batch).unwrap();
            let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
            for (t, g) in analytic.iter().enumerate() {
                for i in 0..g.len().min(12) {
                    let idx = (i * 7919) % g.len();
                    let mut plus = p.clone();
                    plus.tensors_mut()[t][idx] += 1e-5;
                    let mut minus = p.clone();
                    minus.tensors_mut()[t][idx] -= 1e-5;
                    let lp = model.loss_and_grads(&plus, &batch).unwrap().0;
                    let lm = model.loss_and_grads(&minus, &batch).unwrap().0;
                    let fd = (lp - lm) / 2e-5;
                    let is_kernel = t < p.kernels.len();
                    if is_kernel && !model.kernel_mask()[idx] {
                        assert_eq!(g[idx], 0.0);
                        continue;
                    }
                    assert!(
                        (fd - g[idx]).abs() <= 1e-6 * (1.0 + fd.abs()),
                        "{mode:?} tensor {t}[{idx}]: fd {fd} vs {}",
                        g[idx]
                    );
                }
            }
        }
    }
}
