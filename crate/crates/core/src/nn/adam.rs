use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid Adam settings {self:?}")))
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for a list of parameter groups.
///
/// Groups come in weight/bias pairs, one pair per layer, so group `g`
/// belongs to layer `g / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(group_sizes: &[usize], config: AdamConfig) -> Self {
        Self {
            config,
            first_moment: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step_count: 0,
        }
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.first_moment.iter().map(Vec::len).collect()
    }

    /// One bias-corrected Adam descent step.
    ///
    /// Gradients are checked for finiteness before anything is written, so
    /// an error leaves both parameters and moments untouched.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::usage(format!(
                "Adam tracks {} groups, got {} parameter and {} gradient groups",
                self.first_moment.len(),
                params.len(),
                grads.len()
            )));
        }
        for (g, ((p, d), m)) in params
            .iter()
            .zip(grads)
            .zip(&self.first_moment)
            .enumerate()
        {
            if p.len() != d.len() || p.len() != m.len() {
                return Err(Error::usage(format!("group {g} has mismatched lengths")));
            }
            if let Some(k) = d.iter().position(|v| !v.is_finite()) {
                return Err(Error::Training {
                    layer: g / 2,
                    message: format!("non-finite gradient component {k} in group {g}"),
                });
            }
        }

        self.step_count += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step_count as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for (((p, d), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for i in 0..p.len() {
                let g = d[i];
                m[i] = flush(beta1 * m[i] + (1.0 - beta1) * g);
                v[i] = flush(beta2 * v[i] + (1.0 - beta2) * g * g);
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

/// Flushes subnormals to zero.
#[inline]
fn flush(x: f64) -> f64 {
    if x.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        x
    }
}
