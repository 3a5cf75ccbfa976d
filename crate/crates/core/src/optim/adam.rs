use super::OptimError;
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            ..Self::default()
        }
    }
}

/// First and second moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<T: Scalar = f32> {
    pub name: String,
    pub m: Tensor<T>,
    pub v: Tensor<T>,
}

/// A parameter handed to the optimizer along with its gradient.
pub struct NamedParam<'a, T: Scalar> {
    pub name: String,
    pub value: &'a mut Tensor<T>,
    pub grad: &'a Tensor<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T: Scalar = f32> {
    pub config: AdamConfig,
    step: u64,
    moments: Vec<Moments<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            moments: Vec::new(),
        }
    }

    /// Restores a state, e.g. from a checkpoint.
    pub fn from_parts(config: AdamConfig, step: u64, moments: Vec<Moments<T>>) -> Self {
        AdamState { config, step, moments }
    }

    /// Number of updates applied so far.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> &[Moments<T>] {
        &self.moments
    }

    fn ensure_moments(&mut self, params: &[NamedParam<'_, T>]) -> Result<(), OptimError> {
        if self.moments.is_empty() {
            for p in params {
                self.moments.push(Moments {
                    name: p.name.clone(),
                    m: Tensor::zeros(p.value.shape()).expect("parameter shape is valid"),
                    v: Tensor::zeros(p.value.shape()).expect("parameter shape is valid"),
                });
            }
            return Ok(());
        }
        if self.moments.len() != params.len() {
            return Err(OptimError::ParamMismatch {
                name: "<all>".into(),
                reason: format!("expected {} parameters, got {}", self.moments.len(), params.len()),
            });
        }
        for (mo, p) in self.moments.iter().zip(params) {
            if mo.name != p.name || mo.m.shape() != p.value.shape() {
                return Err(OptimError::ParamMismatch {
                    name: p.name.clone(),
                    reason: format!("moment state is for {} {:?}", mo.name, mo.m.shape()),
                });
            }
        }
        Ok(())
    }

    /// One Adam update over every parameter:
    /// `m ← β1·m + (1−β1)·g`, `v ← β2·v + (1−β2)·g²`,
    /// `p ← p − α·m̂ / (√v̂ + ε)` with bias-corrected `m̂`, `v̂`.
    ///
    /// Gradients are validated before anything is modified.
    pub fn step(&mut self, params: &mut [NamedParam<'_, T>]) -> Result<(), OptimError> {
        for p in params.iter() {
            if p.grad.shape() != p.value.shape() {
                return Err(OptimError::ParamMismatch {
                    name: p.name.clone(),
                    reason: format!("gradient shape {:?} vs parameter {:?}", p.grad.shape(), p.value.shape()),
                });
            }
            if !p.grad.is_finite() {
                return Err(OptimError::NonFiniteGradient { name: p.name.clone() });
            }
        }
        self.ensure_moments(params)?;
        self.step += 1;

        let c = self.config;
        let t = self.step as i32;
        let b1 = T::from_f64_lossy(c.beta1);
        let b2 = T::from_f64_lossy(c.beta2);
        let one_minus_b1 = T::from_f64_lossy(1.0 - c.beta1);
        let one_minus_b2 = T::from_f64_lossy(1.0 - c.beta2);
        let correction1 = T::from_f64_lossy(1.0 - c.beta1.powi(t));
        let correction2 = T::from_f64_lossy(1.0 - c.beta2.powi(t));
        let lr = T::from_f64_lossy(c.learning_rate);
        let eps = T::from_f64_lossy(c.epsilon);

        for (p, mo) in params.iter_mut().zip(&mut self.moments) {
            let values = p.value.data_mut();
            let m = mo.m.data_mut();
            let v = mo.v.data_mut();
            for (((w, &g), mi), vi) in values.iter_mut().zip(p.grad.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = b1 * *mi + one_minus_b1 * g;
                *vi = b2 * *vi + one_minus_b2 * g * g;
                let m_hat = *mi / correction1;
                let v_hat = *vi / correction2;
                *w = *w - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
