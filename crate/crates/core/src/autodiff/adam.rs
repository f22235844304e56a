use serde::{Deserialize, Serialize};

use super::{Gradients, ParamStore, Tensor};
use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates for every parameter, plus the step count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: Vec<Tensor>,
    pub second_moment: Vec<Tensor>,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &ParamStore) -> Self {
        let zeros: Vec<Tensor> = params.iter().map(|(_, p)| Tensor::zeros(p.value.shape())).collect();
        Self { first_moment: zeros.clone(), second_moment: zeros, step: 0 }
    }
}

/// One bias-corrected Adam update of every parameter in `params`.
pub fn adam_step(params: &mut ParamStore, grads: &Gradients, lr: f64, state: &mut AdamState) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
    }
    if grads.len() != params.len() || state.first_moment.len() != params.len() {
        return Err(Error::Shape {
            op: "adam",
            shapes: format!(
                "{} params, {} grads, {} moments",
                params.len(),
                grads.len(),
                state.first_moment.len()
            ),
        });
    }
    for id in params.ids() {
        let (p, g) = (params.get(id).shape(), grads.get(id).shape());
        if p != g || state.first_moment[id.0].shape() != p || state.second_moment[id.0].shape() != p {
            return Err(Error::shape("adam", &[p, g]));
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - BETA1.powi(t);
    let bias2 = 1.0 - BETA2.powi(t);
    for id in params.ids() {
        let g = grads.get(id).values();
        let m = state.first_moment[id.0].values_mut();
        let v = state.second_moment[id.0].values_mut();
        let p = params.get_mut(id).values_mut();
        for i in 0..p.len() {
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
            v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> ParamStore {
        let mut s = ParamStore::new();
        s.add("w", Tensor::matrix(2, 3, vec![0.1, -0.2, 0.3, 0.4, -0.5, 0.6]).unwrap());
        s.add("b", Tensor::vector(vec![1.0, -1.0]));
        s
    }

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut params = store();
        let before = params.clone();
        let mut state = AdamState::new(&params);
        state.first_moment[0].values_mut()[0] = 0.0;
        let zeros = Gradients::zeros_like(&params);
        adam_step(&mut params, &zeros, 0.01, &mut state).unwrap();
        assert_eq!(params, before);
        assert_eq!(state.step, 1);

        // Non-zero moments decay geometrically under zero gradients.
        let mut state = AdamState::new(&params);
        state.first_moment[1].values_mut()[0] = 1.0;
        state.second_moment[1].values_mut()[0] = 1.0;
        adam_step(&mut params, &zeros, 0.01, &mut state).unwrap();
        assert!((state.first_moment[1].values()[0] - BETA1).abs() < 1e-15);
        assert!((state.second_moment[1].values()[0] - BETA2).abs() < 1e-15);
    }

    #[test]
    fn first_step_moves_each_coordinate_by_about_lr() {
        let mut params = store();
        let before = params.clone();
        let mut state = AdamState::new(&params);
        let grads = Gradients::from_tensors(vec![
            Tensor::matrix(2, 3, vec![3.0, -0.01, 250.0, -7.0, 1e-3, 0.5]).unwrap(),
            Tensor::vector(vec![-2.0, 4.0]),
        ]);
        let lr = 1e-3;
        adam_step(&mut params, &grads, lr, &mut state).unwrap();
        for id in params.ids() {
            for ((new, old), g) in params[id].values().iter().zip(before[id].values()).zip(grads[id].values()) {
                let delta = new - old;
                // m_hat / sqrt(v_hat) = g / |g| on the first step, up to epsilon.
                assert!((delta + lr * g.signum()).abs() < lr * 1e-4, "delta {delta} for g {g}");
            }
        }
    }

    #[test]
    fn step_counter_increments_once_per_call() {
        let mut params = store();
        let mut state = AdamState::new(&params);
        let grads = Gradients::zeros_like(&params);
        for expected in 1..=5 {
            adam_step(&mut params, &grads, 0.1, &mut state).unwrap();
            assert_eq!(state.step, expected);
        }
    }

    #[test]
    fn second_moments_stay_nonnegative() {
        let mut params = store();
        let mut state = AdamState::new(&params);
        for k in 0..20 {
            let s = if k % 2 == 0 { 1.0 } else { -3.0 };
            let grads = Gradients::from_tensors(vec![
                Tensor::filled(&[2, 3], s * 0.7),
                Tensor::filled(&[2], -s),
            ]);
            adam_step(&mut params, &grads, 0.05, &mut state).unwrap();
        }
        assert!(state.second_moment.iter().all(|v| v.values().iter().all(|&x| x >= 0.0)));
    }

    #[test]
    fn rejects_mismatched_gradient_shape() {
        let mut params = store();
        let mut state = AdamState::new(&params);
        let grads = Gradients::from_tensors(vec![Tensor::zeros(&[3, 2]), Tensor::zeros(&[2])]);
        assert!(matches!(adam_step(&mut params, &grads, 0.1, &mut state), Err(Error::Shape { .. })));
        assert_eq!(state.step, 0);
    }

    #[test]
    fn rejects_nonpositive_learning_rate() {
        let mut params = store();
        let mut state = AdamState::new(&params);
        let grads = Gradients::zeros_like(&params);
        assert!(adam_step(&mut params, &grads, 0.0, &mut state).is_err());
    }
}
