use super::{cast, Gradients, Model, Scalar};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Smallest and largest learning rate a schedule may produce.
pub const LR_RANGE: (f64, f64) = (1e-6, 1e-4);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamParams {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.epsilon > 0.0;
        if !ok {
            return Err(Error::InvalidParam("adam needs betas in [0, 1) and epsilon > 0".into()));
        }
        Ok(())
    }
}

/// Step decay: `initial · decay^(epoch / step_epochs)`, never below `floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrSchedule {
    pub initial: f64,
    pub decay: f64,
    pub step_epochs: usize,
    pub floor: f64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            initial: 1e-4,
            decay: 0.5,
            step_epochs: 10,
            floor: 1e-6,
        }
    }
}

impl LrSchedule {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = LR_RANGE;
        let in_range = |v: f64| (lo..=hi).contains(&v);
        if !in_range(self.initial) || !in_range(self.floor) || self.floor > self.initial {
            return Err(Error::InvalidParam(format!(
                "learning rates must satisfy {lo} <= floor <= initial <= {hi}"
            )));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) || self.step_epochs == 0 {
            return Err(Error::InvalidParam("decay must be in (0, 1] and step_epochs >= 1".into()));
        }
        Ok(())
    }

    /// Rate for a zero-based epoch.
    pub fn lr(&self, epoch: usize) -> f64 {
        let steps = (epoch / self.step_epochs.max(1)) as i32;
        (self.initial * self.decay.powi(steps)).max(self.floor)
    }
}

/// Adam state for one model.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    params: AdamParams,
    t: i32,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(params: AdamParams, model: &Model<T>) -> Self {
        let zeros: Vec<Vec<T>> = model.params().iter().map(|p| vec![T::zero(); p.len()]).collect();
        Self {
            params,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, model: &mut Model<T>, grads: &Gradients<T>, lr: f64) {
        self.t += 1;
        let (b1, b2) = (self.params.beta1, self.params.beta2);
        let c1: T = cast(1.0 - b1.powi(self.t));
        let c2: T = cast(1.0 - b2.powi(self.t));
        let (b1, b2): (T, T) = (cast(b1), cast(b2));
        let (lr, eps): (T, T) = (cast(lr), cast(self.params.epsilon));
        let one = T::one();
        for (((p, g), m), v) in model
            .params_mut()
            .iter_mut()
            .zip(&grads.tensors)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
