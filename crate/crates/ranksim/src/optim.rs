//! Adam with bias correction and decoupled weight decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RegressorNet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled: applied as `lr * weight_decay * param` on top of the
    /// adaptive update.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

/// Per-tensor first/second moment accumulators plus the step count.
#[derive(Debug, Clone)]
pub struct AdamState {
    cfg: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(cfg: AdamConfig, tensor_lens: &[usize]) -> Self {
        Self {
            cfg,
            m: tensor_lens.iter().map(|&l| vec![0.0; l]).collect(),
            v: tensor_lens.iter().map(|&l| vec![0.0; l]).collect(),
            step: 0,
        }
    }

    pub fn for_net(cfg: AdamConfig, net: &RegressorNet) -> Self {
        let lens: Vec<usize> = net.parameter_tensors().iter().map(|t| t.len()).collect();
        Self::new(cfg, &lens)
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.cfg.lr = lr;
    }

    pub fn lr(&self) -> f64 {
        self.cfg.lr
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update of all tensors in place.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::LengthMismatch {
                context: "adam tensors",
                left: params.len(),
                right: grads.len(),
            });
        }
        for (t, g) in grads.iter().enumerate() {
            if g.len() != self.m[t].len() {
                return Err(Error::LengthMismatch {
                    context: "adam tensor shape",
                    left: g.len(),
                    right: self.m[t].len(),
                });
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::Diverged(format!("non-finite gradient in tensor {t}")));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c = self.cfg;
        let bias1 = 1.0 - c.beta1.powi(t);
        let bias2 = 1.0 - c.beta2.powi(t);
        for (tensor, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.m[tensor];
            let v = &mut self.v[tensor];
            for k in 0..g.len() {
                m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
                v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
                let m_hat = m[k] / bias1;
                let v_hat = v[k] / bias2;
                p[k] -= c.lr * (m_hat / (v_hat.sqrt() + c.eps) + c.weight_decay * p[k]);
            }
        }
        Ok(())
    }
}
