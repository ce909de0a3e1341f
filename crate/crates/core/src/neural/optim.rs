use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

use super::ParamSet;

pub const DEFAULT_LR: f64 = 0.001;
pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPS: f64 = 1e-8;
/// Multiplier applied to every parameter before each update.
pub const DEFAULT_WEIGHT_DECAY: f64 = 0.99;
/// Learning-rate multiplier applied once per epoch.
pub const DEFAULT_LR_DECAY: f64 = 0.997;

/// Hyperparameters of the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub lr_decay: f64,
}

impl Default for AdamW {
    fn default() -> Self {
        AdamW {
            lr: DEFAULT_LR,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            eps: DEFAULT_EPS,
            weight_decay: DEFAULT_WEIGHT_DECAY,
            lr_decay: DEFAULT_LR_DECAY,
        }
    }
}

impl AdamW {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.weight_decay > 0.0
            && self.weight_decay <= 1.0
            && self.lr_decay > 0.0
            && self.lr_decay <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("invalid optimizer settings {self:?}")))
        }
    }

    pub fn state_for(&self, params: &ParamSet) -> OptimizerState {
        OptimizerState {
            hyper: *self,
            lr: self.lr,
            step: 0,
            m: params.tensors.iter().map(|t| t.data().iter().map(|_| 0.0).collect()).collect(),
            v: params.tensors.iter().map(|t| t.data().iter().map(|_| 0.0).collect()).collect(),
        }
    }
}

/// Moment buffers, step counter and current learning rate of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub hyper: AdamW,
    pub lr: f64,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl OptimizerState {
    /// Multiplies each parameter by the decay factor, then applies the
    /// bias-corrected Adam update. Nothing changes if any gradient entry is
    /// non-finite.
    pub fn step(&mut self, params: &mut ParamSet, grads: &[Tensor]) -> Result<()> {
        if grads.len() != params.len() || self.m.len() != params.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} gradients for {} parameters",
                grads.len(),
                params.len()
            )));
        }
        for ((name, p), g) in params.names.iter().zip(&params.tensors).zip(grads) {
            if p.shape() != g.shape() {
                return Err(Error::ShapeMismatch(format!("gradient of {name}: {:?} vs {:?}", g.shape(), p.shape())));
            }
            if !g.is_finite() {
                return Err(Error::NonFiniteGradient(name.clone()));
            }
        }
        let h = self.hyper;
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - h.beta1.powi(t);
        let c2 = 1.0 - h.beta2.powi(t);
        for (((p, g), m), v) in params.tensors.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for (((w, &gi), mi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *w *= h.weight_decay;
                *mi = h.beta1 * *mi + (1.0 - h.beta1) * gi;
                *vi = h.beta2 * *vi + (1.0 - h.beta2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *w -= self.lr * m_hat / (v_hat.sqrt() + h.eps);
            }
        }
        Ok(())
    }

    pub fn decay_lr(&mut self) {
        self.lr *= self.hyper.lr_decay;
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().chain(&self.v).flatten().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(v: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.push("w".into(), Tensor::scalar(v));
        p
    }

    #[test]
    fn zero_gradient_is_pure_decay() {
        let mut p = one(1.0);
        let mut s = AdamW::default().state_for(&p);
        s.step(&mut p, &[Tensor::scalar(0.0)]).unwrap();
        assert_eq!(p.tensors[0].item(), 0.99);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn moves_against_gradient_sign() {
        let cfg = AdamW {
            weight_decay: 1.0,
            ..AdamW::default()
        };
        for sign in [1.0, -1.0] {
            let mut p = one(0.0);
            let mut s = cfg.state_for(&p);
            for _ in 0..100 {
                s.step(&mut p, &[Tensor::scalar(sign * 3.0)]).unwrap();
            }
            assert!(p.tensors[0].item() * sign < 0.0);
        }
    }

    #[test]
    fn single_step_matches_hand_computation() {
        let (w0, g) = (0.5, 0.2);
        let mut p = one(w0);
        let mut s = AdamW::default().state_for(&p);
        s.step(&mut p, &[Tensor::scalar(g)]).unwrap();
        let m = 0.1 * g;
        let v = 0.001 * g * g;
        let expected = w0 * 0.99 - 0.001 * (m / 0.1) / ((v / 0.001).sqrt() + 1e-8);
        assert!((p.tensors[0].item() - expected).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_aborts_step() {
        let mut p = one(1.0);
        let mut s = AdamW::default().state_for(&p);
        let before = s.clone();
        assert!(matches!(
            s.step(&mut p, &[Tensor::scalar(f64::NAN)]),
            Err(Error::NonFiniteGradient(_))
        ));
        assert_eq!(p.tensors[0].item(), 1.0);
        assert_eq!(s, before);
    }

    #[test]
    fn lr_decays_per_call() {
        let p = one(1.0);
        let mut s = AdamW::default().state_for(&p);
        s.decay_lr();
        s.decay_lr();
        assert!((s.lr - 0.001 * 0.997 * 0.997).abs() < 1e-18);
    }
}
