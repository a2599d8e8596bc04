use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::ShapeFeatures;
use super::model::{Gradients, Model, Params};
use super::PipelineConfig;
use crate::error::{Error, Result};

/// Adam optimizer state, one moment buffer per parameter tensor.
#[derive(Debug, Clone)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &Params, beta1: f64, beta2: f64, eps: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Self { beta1, beta2, eps, t: 0, m: zeros.clone(), v: zeros }
    }

    pub fn steps(&self) -> u32 {
        self.t
    }

    pub fn step(&mut self, params: &mut Params, grads: &Gradients, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        let grads = grads.tensors();
        for (((p, g), m), v) in params.tensors_mut().into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub params: Params,
    pub history: History,
}

/// Fraction of examples whose arg-max logit equals the label.
pub fn accuracy(model: &Model, params: &Params, data: &[(ShapeFeatures, usize)]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("no examples to score".into()));
    }
    let mut hits = 0;
    for (f, label) in data {
        if model.predict(params, f)? == *label {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

/// Mini-batch Adam training. Shuffling and initialization are seeded by `config.seed`.
pub fn train(
    config: &PipelineConfig,
    class_names: &[String],
    train_set: &[(ShapeFeatures, usize)],
    test_set: &[(ShapeFeatures, usize)],
) -> Result<TrainOutcome> {
    if train_set.is_empty() {
        return Err(Error::Empty("training set is empty".into()));
    }
    let model = Model::new(*config, class_names.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = model.init_params(&mut rng);
    let mut adam = Adam::new(&params, config.beta1, config.beta2, config.eps);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = History::default();
    let mut step = 0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&ShapeFeatures, usize)> =
                chunk.iter().map(|&i| (&train_set[i].0, train_set[i].1)).collect();
            let (loss, grads) = model.loss_and_grads(&params, &batch)?;
            total += loss * batch.len() as f64;
            adam.step(&mut params, &grads, config.learning_rate(step));
            step += 1;
        }
        let record = EpochRecord {
            epoch,
            steps: step,
            learning_rate: config.learning_rate(step),
            loss: total / train_set.len() as f64,
            train_accuracy: accuracy(&model, &params, train_set)?,
            test_accuracy: if test_set.is_empty() { None } else { Some(accuracy(&model, &params, test_set)?) },
        };
        log::info!(
            "epoch {} loss {:.4} train {:.3} test {}",
            epoch,
            record.loss,
            record.train_accuracy,
            record.test_accuracy.map_or("-".to_string(), |a| format!("{a:.3}"))
        );
        history.epochs.push(record);
    }
    Ok(TrainOutcome { model, params, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::FeatureMode;

    #[test]
    fn adam_minimizes_quadratic_bias() {
        let cfg = PipelineConfig { mode: FeatureMode::AxialSymmetry, ..Default::default() };
        let model = Model::new(cfg, 2).unwrap();
        let mut p = model.zero_params();
        p.bias[0] = 3.0;
        let mut adam = Adam::new(&p, 0.9, 0.999, 1e-8);
        for _ in 0..2000 {
            // gradient of |bias|^2 / 2
            let mut g = Params::zeros_like(&p);
            g.bias.copy_from(&p.bias);
            adam.step(&mut p, &g, 0.01);
        }
        assert!(p.bias.amax() < 1e-2);
        assert_eq!(adam.steps(), 2000);
    }

    #[test]
    fn separable_axial_features_are_learned() {
        let cfg = PipelineConfig { mode: FeatureMode::AxialSymmetry, epochs: 30, lr: 0.05, ..Default::default() };
        let data: Vec<(ShapeFeatures, usize)> = (0..40)
            .map(|i| {
                let label = i % 2;
                let x = if label == 0 { 0.2 } else { 0.8 } + 0.01 * (i as f64 / 40.0);
                (ShapeFeatures { slots: vec![vec![x, 1.0 - x, x, 0.5]] }, label)
            })
            .collect();
        let names = vec!["a".to_string(), "b".to_string()];
        let out = train(&cfg, &names, &data, &data).unwrap();
        assert_eq!(out.history.epochs.len(), 30);
        assert_eq!(out.history.epochs.last().unwrap().test_accuracy, Some(1.0));
        let again = train(&cfg, &names, &data, &[]).unwrap();
        assert_eq!(again.params, out.params);
        assert!(train(&cfg, &names, &[], &[]).is_err());
    }
}
