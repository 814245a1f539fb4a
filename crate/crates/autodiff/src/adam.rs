//! Adam with bias correction.

use log::warn;

use crate::error::{AutodiffError, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Outcome of one [`AdamState::step`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Applied,
    /// A gradient entry was NaN or infinite; nothing in the group moved.
    SkippedNonFinite {
        param: usize,
        index: usize,
    },
}

/// Moment estimates for one parameter group.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step_count: u64,
    first_moment: Vec<Tensor>,
    second_moment: Vec<Tensor>,
}

impl AdamState {
    pub fn new(shapes: &[&[usize]], config: AdamConfig) -> Self {
        AdamState {
            config,
            step_count: 0,
            first_moment: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            second_moment: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
        }
    }

    pub fn for_params(params: &[Tensor], config: AdamConfig) -> Self {
        let shapes: Vec<&[usize]> = params.iter().map(|p| p.shape()).collect();
        Self::new(&shapes, config)
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[Tensor] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Tensor] {
        &self.second_moment
    }

    /// Applies one update to the whole group. If any gradient entry is
    /// non-finite the group is left untouched, the step is not counted and a
    /// warning is logged.
    pub fn step(
        &mut self,
        params: &mut [Tensor],
        grads: &[Tensor],
        lr: f64,
    ) -> Result<StepOutcome> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(AutodiffError::Contract(format!(
                "adam group tracks {} tensors, got {} params and {} grads",
                self.first_moment.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || p.shape() != self.first_moment[i].shape() {
                return Err(AutodiffError::shape("adam_step", p.shape(), g.shape()));
            }
        }
        for (pi, g) in grads.iter().enumerate() {
            if let Some(index) = g.data().iter().position(|v| !v.is_finite()) {
                warn!(
                    "adam: non-finite gradient at tensor {pi} entry {index}; group update skipped"
                );
                return Ok(StepOutcome::SkippedNonFinite { param: pi, index });
            }
        }

        self.step_count += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let t = self.step_count as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(
            self.first_moment
                .iter_mut()
                .zip(self.second_moment.iter_mut()),
        ) {
            for (((pv, &gv), mv), vv) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mv = beta1 * *mv + (1.0 - beta1) * gv;
                *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *pv -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(StepOutcome::Applied)
    }
}
