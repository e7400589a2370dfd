use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};

/// Adam moments with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    check_len("gradient", params.len(), grads.len())?;
    check_len("first moment", params.len(), state.m.len())?;
    check_len("second moment", params.len(), state.v.len())?;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = state.beta1 * *m + (1.0 - state.beta1) * g;
        *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.0, -2.0];
        let mut s = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut s, 0.1).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![0.0, 0.0, 3.0];
        let mut s = AdamState::new(3);
        adam_step(&mut p, &[0.5, 0.5, -2.0], &mut s, 0.001).unwrap();
        // m̂ = g, v̂ = g², so the step is lr · g / (|g| + ε).
        assert_abs_diff_eq!(p[0], -0.001 * 0.5 / (0.5 + 1e-8), epsilon = 1e-15);
        assert_eq!(p[0], p[1]);
        assert_abs_diff_eq!(p[2], 3.001, epsilon = 1e-10);
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::new(2);
        assert!(adam_step(&mut [0.0; 2], &[0.0; 3], &mut s, 0.1).is_err());
        assert!(adam_step(&mut [0.0; 3], &[0.0; 3], &mut s, 0.1).is_err());
        assert_eq!(s.step, 0);
    }

    #[test]
    fn minimises_a_quadratic() {
        let mut p = vec![2.0];
        let mut s = AdamState::new(1);
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 0.5)];
            adam_step(&mut p, &g, &mut s, 0.01).unwrap();
        }
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-3);
    }
}
