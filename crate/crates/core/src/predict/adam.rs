use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub params: AdamParams,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: AdamParams, shapes: &[usize]) -> Self {
        Adam {
            params,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One bias-corrected update of `weights` against `grads`.
    pub fn update(&mut self, weights: Vec<&mut Vec<f64>>, grads: Vec<&Vec<f64>>) {
        self.step += 1;
        let AdamParams { lr, beta1, beta2, eps } = self.params;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((w, g), m), v) in weights.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..w.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                w[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut adam = Adam::new(AdamParams::default(), &[2]);
        let mut w = vec![1.0, -1.0];
        let g = vec![0.5, -2.0];
        adam.update(vec![&mut w], vec![&g]);
        // bias-corrected m/sqrt(v) = sign(g) on the first step
        assert!((w[0] - (1.0 - 1e-3)).abs() < 1e-9);
        assert!((w[1] - (-1.0 + 1e-3)).abs() < 1e-9);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let params = AdamParams {
            lr: 0.05,
            ..Default::default()
        };
        let mut adam = Adam::new(params, &[1]);
        let mut w = vec![3.0];
        for _ in 0..2000 {
            let g = vec![2.0 * (w[0] - 1.0)];
            adam.update(vec![&mut w], vec![&g]);
        }
        assert!((w[0] - 1.0).abs() < 1e-3);
    }
}
