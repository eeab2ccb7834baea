//! Adam with bias correction and the one-cycle learning-rate policy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::mlp::{Gradients, MlpModel};
use super::tensor::Tensor2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamParams {
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_adam_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_adam_eps() -> f64 {
    1e-8
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams { beta1: default_beta1(), beta2: default_beta2(), eps: default_adam_eps() }
    }
}

/// First/second moment accumulators mirroring a model's parameter shapes.
#[derive(Debug, Clone)]
pub struct AdamState {
    t: u64,
    m_weights: Vec<Tensor2>,
    v_weights: Vec<Tensor2>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(model: &MlpModel) -> Self {
        let m_weights =
            model.weights().iter().map(|w| Tensor2::zeros(w.rows(), w.cols())).collect::<Vec<_>>();
        let m_biases = model.biases().iter().map(|b| vec![0.0; b.len()]).collect::<Vec<_>>();
        AdamState {
            t: 0,
            v_weights: m_weights.clone(),
            m_weights,
            v_biases: m_biases.clone(),
            m_biases,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update over a flat parameter slice.
pub fn adam_update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    lr: f64,
    hp: &AdamParams,
) {
    debug_assert!(t >= 1);
    let bc1 = 1.0 - hp.beta1.powi(t as i32);
    let bc2 = 1.0 - hp.beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g;
        v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + hp.eps);
    }
}

/// Apply one Adam step to every model parameter.
pub fn adam_step(
    model: &mut MlpModel,
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
    hp: &AdamParams,
) -> Result<()> {
    if grads.d_weights.len() != state.m_weights.len()
        || grads.d_biases.len() != state.m_biases.len()
    {
        return Err(Error::validation("gradient shapes do not match optimizer state".to_string()));
    }
    state.t += 1;
    let t = state.t;
    let (weights, biases) = model.params_mut();
    for l in 0..weights.len() {
        adam_update_slice(
            weights[l].data_mut(),
            grads.d_weights[l].data(),
            state.m_weights[l].data_mut(),
            state.v_weights[l].data_mut(),
            t,
            lr,
            hp,
        );
        adam_update_slice(
            &mut biases[l],
            &grads.d_biases[l],
            &mut state.m_biases[l],
            &mut state.v_biases[l],
            t,
            lr,
            hp,
        );
    }
    Ok(())
}

/// Cosine-annealed one-cycle policy: the rate rises from `max_lr /
/// div_initial` to `max_lr` over the warmup fraction of the run, then
/// anneals to `max_lr / div_final`. Continuous and positive everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneCycleSchedule {
    pub max_lr: f64,
    pub total_steps: usize,
    pub warmup_frac: f64,
    pub div_initial: f64,
    pub div_final: f64,
}

impl OneCycleSchedule {
    pub fn new(
        max_lr: f64,
        total_steps: usize,
        warmup_frac: f64,
        div_initial: f64,
        div_final: f64,
    ) -> Result<Self> {
        if !(warmup_frac > 0.0 && warmup_frac < 1.0) {
            return Err(Error::validation(format!(
                "warmup fraction must be in (0,1), got {warmup_frac}"
            )));
        }
        if max_lr <= 0.0 || div_initial <= 0.0 || div_final <= 0.0 || total_steps == 0 {
            return Err(Error::validation("one-cycle parameters must be positive".to_string()));
        }
        Ok(OneCycleSchedule { max_lr, total_steps, warmup_frac, div_initial, div_final })
    }

    /// Learning rate at `step` in `[0, total_steps]`.
    pub fn lr_at(&self, step: usize) -> Result<f64> {
        if step > self.total_steps {
            return Err(Error::validation(format!(
                "step {step} is outside the schedule of {} steps",
                self.total_steps
            )));
        }
        let warm_steps = self.total_steps as f64 * self.warmup_frac;
        let s = step as f64;
        let lr = if s <= warm_steps {
            cosine_interp(self.max_lr / self.div_initial, self.max_lr, s / warm_steps)
        } else {
            let denom = self.total_steps as f64 - warm_steps;
            cosine_interp(self.max_lr, self.max_lr / self.div_final, (s - warm_steps) / denom)
        };
        Ok(lr)
    }
}

/// Cosine interpolation from `a` (x = 0) to `b` (x = 1).
fn cosine_interp(a: f64, b: f64, x: f64) -> f64 {
    b + (a - b) * (1.0 + (std::f64::consts::PI * x).cos()) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use crate::rng::derive_rng;

    fn tiny_model() -> MlpModel {
        MlpModel::new(vec![2, 2], vec![Activation::Identity], &mut derive_rng(1, &[5]))
            .unwrap()
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut model = tiny_model();
        let before = model.clone();
        let grads = Gradients {
            d_weights: vec![Tensor2::zeros(2, 2)],
            d_biases: vec![vec![0.0; 2]],
        };
        let mut state = AdamState::new(&model);
        adam_step(&mut model, &grads, &mut state, 0.1, &AdamParams::default()).unwrap();
        assert_eq!(model, before);
    }

    #[test]
    fn first_step_with_unit_gradient_moves_by_lr() {
        let mut p = [1.0];
        let mut m = [0.0];
        let mut v = [0.0];
        adam_update_slice(&mut p, &[1.0], &mut m, &mut v, 1, 0.05, &AdamParams::default());
        // bias-corrected m_hat / sqrt(v_hat) = 1, so the update is ~ -lr.
        assert!((p[0] - (1.0 - 0.05)).abs() < 1e-8, "{}", p[0]);
    }

    #[test]
    fn adam_is_deterministic() {
        let run = || {
            let mut model = tiny_model();
            let mut state = AdamState::new(&model);
            let grads = Gradients {
                d_weights: vec![Tensor2::from_vec(2, 2, vec![0.5, -1.0, 2.0, 0.1]).unwrap()],
                d_biases: vec![vec![0.3, -0.2]],
            };
            for _ in 0..10 {
                adam_step(&mut model, &grads, &mut state, 0.01, &AdamParams::default()).unwrap();
            }
            model
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn one_cycle_endpoints_and_peak() {
        let s = OneCycleSchedule::new(1e-3, 1000, 0.3, 25.0, 1e4).unwrap();
        assert!((s.lr_at(0).unwrap() - 1e-3 / 25.0).abs() < 1e-15);
        assert!((s.lr_at(300).unwrap() - 1e-3).abs() < 1e-12);
        assert!((s.lr_at(1000).unwrap() - 1e-7).abs() < 1e-12);
    }

    #[test]
    fn one_cycle_positive_everywhere_with_peak_max() {
        let s = OneCycleSchedule::new(3e-3, 500, 0.3, 25.0, 1e4).unwrap();
        let peak = s.lr_at(150).unwrap();
        for step in 0..=500 {
            let lr = s.lr_at(step).unwrap();
            assert!(lr > 0.0);
            assert!(lr <= peak + 1e-15);
        }
    }

    #[test]
    fn one_cycle_rejects_bad_inputs() {
        assert!(OneCycleSchedule::new(1e-3, 100, 0.0, 25.0, 1e4).is_err());
        assert!(OneCycleSchedule::new(1e-3, 100, 1.0, 25.0, 1e4).is_err());
        assert!(OneCycleSchedule::new(-1.0, 100, 0.3, 25.0, 1e4).is_err());
        let s = OneCycleSchedule::new(1e-3, 100, 0.3, 25.0, 1e4).unwrap();
        assert!(s.lr_at(101).is_err());
    }
}
