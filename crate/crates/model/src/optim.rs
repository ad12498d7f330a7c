use serde::{Deserialize, Serialize};

/// AdamW hyperparameters with linear warmup to a constant rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub warmup_steps: usize,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            warmup_steps: 500,
        }
    }
}

impl AdamWConfig {
    /// Learning rate of update number `step` (1-based).
    pub fn lr_at(&self, step: usize) -> f64 {
        if self.warmup_steps == 0 || step >= self.warmup_steps {
            self.lr
        } else {
            self.lr * step as f64 / self.warmup_steps as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamW {
    pub config: AdamWConfig,
    m: Vec<f32>,
    v: Vec<f32>,
    step: usize,
}

impl AdamW {
    pub fn new(config: AdamWConfig, len: usize) -> Self {
        Self {
            config,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn steps(&self) -> usize {
        self.step
    }

    /// One update. `decay_mask[i]` is false for parameters exempt from
    /// weight decay.
    pub fn update(&mut self, params: &mut [f32], grad: &[f32], decay_mask: &[bool]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.step += 1;
        let c = &self.config;
        let lr = c.lr_at(self.step);
        let t = self.step as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        let step_size = (lr / bc1) as f32;
        let bc2_sqrt = bc2.sqrt() as f32;
        let (b1, b2, eps) = (c.beta1 as f32, c.beta2 as f32, c.eps as f32);
        let decay = (lr * c.weight_decay) as f32;
        let moments = self.m.iter_mut().zip(self.v.iter_mut());
        for (((p, &g), &decays), (m, v)) in params.iter_mut().zip(grad).zip(decay_mask).zip(moments) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            if decays {
                *p -= decay * *p;
            }
            *p -= step_size * *m / (v.sqrt() / bc2_sqrt + eps);
        }
    }
}
