//! Teacher-forced training loop.

use log::info;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use readorder_core::heuristic::heuristic_order;
use readorder_core::Page;
use serde::{Deserialize, Serialize};

use crate::network::Model;
use crate::optim::{AdamW, AdamWConfig};
use crate::packing::{pack, page_features, PackedSequence};
use crate::{ModelError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamWConfig,
    /// Probability that a page's source is shuffled instead of presented in
    /// heuristic order.
    pub shuffle_rate: f64,
    /// Global gradient norm cap; 0 disables clipping.
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 16,
            optimizer: AdamWConfig::default(),
            shuffle_rate: 0.0,
            clip_norm: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(ModelError::Config("batch_size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.shuffle_rate) {
            return Err(ModelError::Config("shuffle_rate must lie in [0, 1]".into()));
        }
        if !(self.optimizer.lr > 0.0 && self.optimizer.lr.is_finite()) {
            return Err(ModelError::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-step loss of every epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: usize,
}

/// Order in which a page's tokens are shown to the encoder: heuristic order,
/// or a uniform shuffle when `shuffled`.
pub fn presentation_order(page: &Page, shuffled: bool, rng: &mut impl Rng) -> Vec<usize> {
    if shuffled {
        let mut order: Vec<usize> = (0..page.len()).collect();
        order.shuffle(rng);
        order
    } else {
        heuristic_order(&page.tokens)
    }
}

/// Presentation orders for a page list, drawn from one seeded stream.
pub fn presentation_orders(pages: &[Page], shuffle_rate: f64, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pages
        .iter()
        .map(|p| {
            let shuffled = shuffle_rate > 0.0 && rng.random::<f64>() < shuffle_rate;
            presentation_order(p, shuffled, &mut rng)
        })
        .collect()
}

fn decay_mask(model: &Model<f32>) -> Vec<bool> {
    let mut mask = vec![false; model.num_params()];
    for e in &model.layout.entries {
        // matrices decay; biases, norms and the start vector do not
        if e.rows > 1 {
            mask[e.range()].fill(true);
        }
    }
    mask
}

pub struct Trainer {
    pub config: TrainConfig,
    optimizer: AdamW,
    decay: Vec<bool>,
}

impl Trainer {
    pub fn new(model: &Model<f32>, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            optimizer: AdamW::new(config.optimizer.clone(), model.num_params()),
            decay: decay_mask(model),
            config,
        })
    }

    pub fn steps(&self) -> usize {
        self.optimizer.steps()
    }

    /// One optimizer update on a batch. Returns the summed loss and the
    /// number of prediction steps.
    pub fn step(&mut self, model: &mut Model<f32>, batch: &[(PackedSequence, u64)]) -> Result<(f64, usize)> {
        let total_steps: usize = batch.iter().map(|(p, _)| p.n_tgt + 1).sum();
        if total_steps == 0 {
            return Ok((0.0, 0));
        }
        let scale = 1.0 / total_steps as f32;
        let frozen: &Model<f32> = model;
        let parts: Vec<(Vec<f32>, f64)> = batch
            .par_iter()
            .map(|(packed, seed)| {
                let mut g = vec![0.0f32; frozen.num_params()];
                let loss = frozen.loss_and_grad(packed, &mut g, scale, *seed)?;
                Ok((g, f64::from(loss.sum)))
            })
            .collect::<Result<_>>()?;
        // fixed summation order keeps updates independent of thread count
        let mut grad = vec![0.0f32; model.num_params()];
        let mut loss = 0.0;
        for (g, l) in &parts {
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b;
            }
            loss += l;
        }
        if !loss.is_finite() || grad.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Diverged {
                epoch: 0,
                step: self.steps(),
                loss,
            });
        }
        if self.config.clip_norm > 0.0 {
            let norm = grad.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt();
            if norm > self.config.clip_norm {
                let s = (self.config.clip_norm / norm) as f32;
                grad.iter_mut().for_each(|v| *v *= s);
            }
        }
        self.optimizer.update(&mut model.params, &grad, &self.decay);
        Ok((loss, total_steps))
    }
}

/// Trains `model` on `pages` for the configured number of epochs.
pub fn train(model: &mut Model<f32>, pages: &[Page], config: &TrainConfig) -> Result<TrainReport> {
    train_with_callback(model, pages, config, |_, _| {})
}

/// Like [`train`], calling `on_epoch(epoch, mean_loss)` after every epoch.
pub fn train_with_callback(
    model: &mut Model<f32>,
    pages: &[Page],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainReport> {
    let mut trainer = Trainer::new(model, config.clone())?;
    if pages.is_empty() {
        return Err(ModelError::Input("no training pages".into()));
    }
    let features = pages
        .iter()
        .map(|p| page_features(p, &model.config))
        .collect::<Result<Vec<_>>>()?;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(epoch as u64 + 1);
        let mut visit: Vec<usize> = (0..pages.len()).collect();
        visit.shuffle(&mut rng);
        let (mut sum, mut count) = (0.0, 0usize);
        for chunk in visit.chunks(config.batch_size) {
            let batch = chunk
                .iter()
                .map(|&i| {
                    let shuffled = config.shuffle_rate > 0.0 && rng.random::<f64>() < config.shuffle_rate;
                    let order = presentation_order(&pages[i], shuffled, &mut rng);
                    Ok((pack(&features[i], &order, true)?, rng.random::<u64>()))
                })
                .collect::<Result<Vec<_>>>()?;
            let (loss, steps) = trainer.step(model, &batch).map_err(|e| match e {
                ModelError::Diverged { step, loss, .. } => ModelError::Diverged { epoch, step, loss },
                other => other,
            })?;
            sum += loss;
            count += steps;
        }
        let mean = sum / count.max(1) as f64;
        info!("epoch {} loss {:.5}", epoch + 1, mean);
        on_epoch(epoch, mean);
        epoch_losses.push(mean);
    }
    Ok(TrainReport {
        epoch_losses,
        steps: trainer.steps(),
    })
}
