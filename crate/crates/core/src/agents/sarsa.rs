//! Semi-gradient SARSA over a linear Q function.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SarsaHyper {
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
}

impl Default for SarsaHyper {
    fn default() -> Self {
        SarsaHyper {
            learning_rate: 0.01,
            gamma: 0.99,
            epsilon_start: 0.3,
            epsilon_end: 0.05,
        }
    }
}

impl SarsaHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("sarsa.learning_rate", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("sarsa.gamma", "must lie in [0, 1]"));
        }
        for (key, v) in [
            ("sarsa.epsilon_start", self.epsilon_start),
            ("sarsa.epsilon_end", self.epsilon_end),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(key, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Linearly decayed exploration rate at `step` of `budget`.
    pub fn epsilon_at(&self, step: usize, budget: usize) -> f64 {
        if budget <= 1 {
            return self.epsilon_end;
        }
        let frac = (step as f64 / (budget - 1) as f64).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// `Q(s, a) = w_a · s + b_a`. Weights are stored per action as the input
/// weights followed by the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQ {
    input: usize,
    actions: usize,
    weights: Vec<f64>,
}

impl LinearQ {
    pub fn zeros(input: usize, actions: usize) -> Self {
        LinearQ {
            input,
            actions,
            weights: vec![0.0; actions * (input + 1)],
        }
    }

    pub fn from_weights(input: usize, actions: usize, weights: Vec<f64>) -> Result<Self> {
        let expected = actions * (input + 1);
        if weights.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: weights.len(),
            });
        }
        Ok(LinearQ {
            input,
            actions,
            weights,
        })
    }

    pub fn input(&self) -> usize {
        self.input
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.input {
            return Err(Error::DimensionMismatch {
                expected: self.input,
                found: obs.len(),
            });
        }
        Ok(())
    }

    fn row(&self, action: usize) -> &[f64] {
        let w = self.input + 1;
        &self.weights[action * w..(action + 1) * w]
    }

    pub fn value(&self, obs: &[f64], action: usize) -> Result<f64> {
        self.check(obs)?;
        if action >= self.actions {
            return Err(Error::IllegalAction(format!("action {action} out of range")));
        }
        let row = self.row(action);
        Ok(row[self.input] + row.iter().zip(obs).map(|(w, x)| w * x).sum::<f64>())
    }

    pub fn values(&self, obs: &[f64]) -> Result<Vec<f64>> {
        (0..self.actions).map(|a| self.value(obs, a)).collect()
    }

    /// One on-policy TD step. `next` is `(s', a')`, ignored when `done`.
    /// Returns the TD error.
    pub fn update(
        &mut self,
        obs: &[f64],
        action: usize,
        reward: f64,
        next: Option<(&[f64], usize)>,
        done: bool,
        lr: f64,
        gamma: f64,
    ) -> Result<f64> {
        let q = self.value(obs, action)?;
        let bootstrap = match next {
            Some((s, a)) if !done => self.value(s, a)?,
            _ => 0.0,
        };
        let td = reward + gamma * bootstrap - q;
        let w = self.input + 1;
        let row = &mut self.weights[action * w..(action + 1) * w];
        for (wi, xi) in row.iter_mut().zip(obs) {
            *wi += lr * td * xi;
        }
        row[self.input] += lr * td;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { index: action });
        }
        Ok(td)
    }
}
