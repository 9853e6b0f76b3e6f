//! First-order parameter updates.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::UpdateRule;

/// Per-parameter-vector update state.
#[derive(Debug, Clone)]
pub(crate) struct Updater {
    rule: UpdateRule,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Updater {
    pub(crate) fn new(rule: UpdateRule, len: usize) -> Self {
        Self {
            rule,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    /// Applies one descent step of `grads` to `params`.
    pub(crate) fn apply(&mut self, params: &mut [f64], grads: &[f64], learning_rate: f64) {
        match self.rule {
            UpdateRule::GradientDescent => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= learning_rate * g;
                }
            }
            UpdateRule::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                self.step += 1;
                let c1 = 1.0 - libm::pow(beta1, self.step as f64);
                let c2 = 1.0 - libm::pow(beta2, self.step as f64);
                for k in 0..params.len() {
                    let g = grads[k];
                    self.m[k] = beta1 * self.m[k] + (1.0 - beta1) * g;
                    self.v[k] = beta2 * self.v[k] + (1.0 - beta2) * g * g;
                    let m_hat = self.m[k] / c1;
                    let v_hat = self.v[k] / c2;
                    params[k] -= learning_rate * m_hat / (libm::sqrt(v_hat) + epsilon);
                }
            }
        }
    }
}
