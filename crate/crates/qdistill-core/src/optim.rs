//! Adam over the flattened parameter vector, with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimizer state: moment estimates plus the hyperparameters. The
/// learning rate defaults to 0.06; beta/epsilon are the canonical Adam
/// values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(Error::InvalidArgument(format!(
            "shape mismatch: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    if let Some(g) = grads.iter().find(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!("non-finite gradient entry {g}")));
    }
    state.step += 1;
    let bc1 = 1.0 - state.beta1.powi(state.step as i32);
    let bc2 = 1.0 - state.beta2.powi(state.step as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
        state.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.first_moment[i] / bc1;
        let v_hat = state.second_moment[i] / bc2;
        params[i] -= state.lr * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut params = vec![0.5, -0.25, 1.0];
        let mut state = AdamState::new(3, 0.06);
        adam_step(&mut params, &[0.0; 3], &mut state).unwrap();
        assert_eq!(params, vec![0.5, -0.25, 1.0]);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_update_approximates_signed_lr() {
        for g in [3.0, -0.7, 1e-3] {
            let mut params = vec![0.0];
            let mut state = AdamState::new(1, 0.06);
            adam_step(&mut params, &[g], &mut state).unwrap();
            assert_abs_diff_eq!(params[0], -0.06 * g.signum(), epsilon = 1e-4);
        }
    }

    #[test]
    fn identical_gradient_streams_are_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let grads: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut a = vec![0.1; 5];
        let mut b = vec![0.1; 5];
        let mut sa = AdamState::new(5, 0.06);
        let mut sb = AdamState::new(5, 0.06);
        for g in &grads {
            adam_step(&mut a, g, &mut sa).unwrap();
            adam_step(&mut b, g, &mut sb).unwrap();
        }
        assert_eq!(a, b);
        assert_eq!(sa, sb);
    }

    #[test]
    fn update_magnitude_is_bounded_by_lr() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut params = vec![0.0; 4];
        let mut state = AdamState::new(4, 0.06);
        for _ in 0..200 {
            let before = params.clone();
            let grads: Vec<f64> = (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect();
            adam_step(&mut params, &grads, &mut state).unwrap();
            for (p, q) in params.iter().zip(&before) {
                assert!((p - q).abs() <= 0.06 * (1.0 + 1e-6));
            }
        }
    }

    #[test]
    fn non_finite_gradient_is_a_numeric_error() {
        let mut params = vec![0.0];
        let mut state = AdamState::new(1, 0.06);
        assert!(matches!(
            adam_step(&mut params, &[f64::NAN], &mut state),
            Err(Error::Numeric(_))
        ));
    }
}
