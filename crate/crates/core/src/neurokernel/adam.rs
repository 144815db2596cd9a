use serde::{Deserialize, Serialize};

use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(num_params: usize, config: AdamConfig) -> Self {
        Self {
            config,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), NnError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NnError::Shape(format!(
                "optimizer tracks {} parameters, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_from_rest_is_identity() {
        let mut s = AdamState::new(3, AdamConfig::default());
        let mut p = vec![1.0, -2.0, 0.5];
        s.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_closed_form() {
        let cfg = AdamConfig::default();
        for g in [3.0, -0.02, 1e-3] {
            let mut s = AdamState::new(1, cfg);
            let mut p = [0.0];
            s.step(&mut p, &[g]).unwrap();
            let expected = -cfg.lr * g / (g.abs() + cfg.epsilon);
            assert!((p[0] - expected).abs() < 1e-15, "{} vs {}", p[0], expected);
        }
    }

    #[test]
    fn two_steps_reduce_quadratic() {
        // f(x) = x², f'(x) = 2x, from x = 1 with lr 0.1
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut s = AdamState::new(1, cfg);
        let mut x = [1.0];
        let mut losses = vec![x[0] * x[0]];
        for _ in 0..2 {
            let g = [2.0 * x[0]];
            s.step(&mut x, &g).unwrap();
            losses.push(x[0] * x[0]);
        }
        // Scripted oracle: both steps written out by hand.
        let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
        let x1 = 1.0 - 0.1 * 2.0 / (2.0 + eps);
        let g2 = 2.0 * x1;
        let m2 = b1 * (1.0 - b1) * 2.0 + (1.0 - b1) * g2;
        let v2 = b2 * (1.0 - b2) * 4.0 + (1.0 - b2) * g2 * g2;
        let x2 = x1 - 0.1 * (m2 / (1.0 - b1 * b1)) / ((v2 / (1.0 - b2 * b2)).sqrt() + eps);
        assert!((x[0] - x2).abs() < 1e-12, "x = {} vs {}", x[0], x2);
        assert!((x2 - 0.80041).abs() < 1e-5);
        assert!(losses[2] < losses[1] && losses[1] < losses[0]);
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::new(2, AdamConfig::default());
        assert!(s.step(&mut [0.0], &[0.0, 0.0]).is_err());
    }
}
