//! Clipped-surrogate PPO with generalized advantage estimation and an
//! Adam optimizer.

use rand::seq::SliceRandom;
use rand::Rng;

use super::nn::ActorCritic;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PpoHyper {
    pub learning_rate: f64,
    /// Minibatch size.
    pub batch_size: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub value_coeff: f64,
    pub entropy_coeff: f64,
    pub epochs: usize,
    /// Environment steps collected per update.
    pub rollout_length: usize,
    pub hidden: Vec<usize>,
}

impl Default for PpoHyper {
    fn default() -> Self {
        PpoHyper {
            learning_rate: 1e-5,
            batch_size: 64,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            value_coeff: 0.5,
            entropy_coeff: 0.01,
            epochs: 4,
            rollout_length: 2048,
            hidden: vec![64, 64],
        }
    }
}

impl PpoHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("ppo.learning_rate", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("ppo.batch_size", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("ppo.gamma", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::config("ppo.gae_lambda", "must lie in [0, 1]"));
        }
        if !(self.clip_epsilon > 0.0) {
            return Err(Error::config("ppo.clip_epsilon", "must be positive"));
        }
        if !(self.value_coeff >= 0.0) {
            return Err(Error::config("ppo.value_coeff", "must be >= 0"));
        }
        if !(self.entropy_coeff >= 0.0) {
            return Err(Error::config("ppo.entropy_coeff", "must be >= 0"));
        }
        if self.epochs == 0 {
            return Err(Error::config("ppo.epochs", "must be positive"));
        }
        if self.rollout_length == 0 {
            return Err(Error::config("ppo.rollout_length", "must be positive"));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::config("ppo.hidden", "layer widths must be positive"));
        }
        Ok(())
    }
}

/// One environment transition as recorded during a rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub mask: Vec<bool>,
    pub action: usize,
    pub reward: f64,
    pub next_observation: Vec<f64>,
    pub done: bool,
    pub log_prob: f64,
    pub value: f64,
}

/// Generalized advantage estimates and returns.
///
/// `values` carries one extra trailing bootstrap entry. A `done` step does
/// not bootstrap from its successor.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n + 1, "values need a bootstrap entry");
    assert_eq!(dones.len(), n);
    let mut adv = vec![0.0; n];
    let mut next = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * live - values[t];
        next = delta + gamma * lambda * live * next;
        adv[t] = next;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// A transition reduced to what the PPO loss needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoSample {
    pub observation: Vec<f64>,
    pub mask: Vec<bool>,
    pub action: usize,
    pub log_prob_old: f64,
    pub advantage: f64,
    pub ret: f64,
}

impl PpoSample {
    /// Builds samples from a rollout; `bootstrap` is the value estimate of
    /// the observation following the last transition.
    pub fn from_rollout(rollout: &[Transition], bootstrap: f64, gamma: f64, lambda: f64) -> Vec<Self> {
        let rewards: Vec<f64> = rollout.iter().map(|t| t.reward).collect();
        let dones: Vec<bool> = rollout.iter().map(|t| t.done).collect();
        let mut values: Vec<f64> = rollout.iter().map(|t| t.value).collect();
        values.push(bootstrap);
        let (adv, ret) = gae(&rewards, &values, &dones, gamma, lambda);
        rollout
            .iter()
            .zip(adv.into_iter().zip(ret))
            .map(|(t, (advantage, ret))| PpoSample {
                observation: t.observation.clone(),
                mask: t.mask.clone(),
                action: t.action,
                log_prob_old: t.log_prob,
                advantage,
                ret,
            })
            .collect()
    }
}

/// Log-probabilities of the masked softmax; masked entries are `-inf`.
pub fn log_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    let lse = max
        + logits
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(l, _)| (l - max).exp())
            .sum::<f64>()
            .ln();
    logits
        .iter()
        .zip(mask)
        .map(|(l, &m)| if m { l - lse } else { f64::NEG_INFINITY })
        .collect()
}

/// Loss terms averaged over a minibatch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    /// Negated clipped surrogate.
    pub policy: f64,
    /// Mean squared value error.
    pub value: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

impl LossParts {
    pub fn total(&self, hyper: &PpoHyper) -> f64 {
        self.policy + hyper.value_coeff * self.value - hyper.entropy_coeff * self.entropy
    }
}

/// PPO loss of `net` on `batch`, and its parameter gradient when `grad`
/// is given.
pub fn ppo_loss(
    net: &ActorCritic,
    batch: &[PpoSample],
    hyper: &PpoHyper,
    mut grad: Option<&mut [f64]>,
) -> Result<LossParts> {
    let n = batch.len() as f64;
    let eps = hyper.clip_epsilon;
    let mut parts = LossParts::default();
    for s in batch {
        let cache = net.forward(&s.observation)?;
        let logp = log_softmax(&cache.logits, &s.mask);
        let probs: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
        let entropy: f64 = -probs
            .iter()
            .zip(&logp)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, l)| p * l)
            .sum::<f64>();
        let log_ratio = logp[s.action] - s.log_prob_old;
        let ratio = log_ratio.exp();
        let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
        let unclipped_obj = ratio * s.advantage;
        let clipped_obj = clipped * s.advantage;
        let uses_unclipped = unclipped_obj <= clipped_obj;
        let value_err = cache.value - s.ret;

        parts.policy -= unclipped_obj.min(clipped_obj) / n;
        parts.value += value_err * value_err / n;
        parts.entropy += entropy / n;
        if (ratio - 1.0).abs() > eps {
            parts.clip_fraction += 1.0 / n;
        }
        parts.approx_kl += ((ratio - 1.0) - log_ratio) / n;

        if let Some(g) = grad.as_deref_mut() {
            // d(-min(rA, clip(r)A))/d logp_a
            let d_logp = if uses_unclipped { -unclipped_obj } else { 0.0 };
            let d_logits: Vec<f64> = (0..probs.len())
                .map(|j| {
                    if !s.mask[j] {
                        return 0.0;
                    }
                    let onehot = if j == s.action { 1.0 } else { 0.0 };
                    let d_policy = d_logp * (onehot - probs[j]);
                    // d(-c H)/dz_j = c p_j (log p_j + H)
                    let d_entropy = hyper.entropy_coeff * probs[j] * (logp[j] + entropy);
                    (d_policy + d_entropy) / n
                })
                .collect();
            let d_value = 2.0 * hyper.value_coeff * value_err / n;
            net.backward(&cache, &d_logits, d_value, g);
        }
    }
    Ok(parts)
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Adam {
    pub fn new(n: usize, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// Gradient-descent step on `params`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    /// Clip fraction of the first minibatch of the first epoch.
    pub initial_clip_fraction: f64,
    pub approx_kl: f64,
    pub minibatches: usize,
}

/// Network plus optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoLearner {
    pub net: ActorCritic,
    pub adam: Adam,
    pub hyper: PpoHyper,
}

impl PpoLearner {
    pub fn new(net: ActorCritic, hyper: PpoHyper) -> Self {
        let adam = Adam::new(net.params().len(), hyper.learning_rate);
        PpoLearner { net, adam, hyper }
    }

    /// Runs `epochs` passes of shuffled minibatch updates over `batch`.
    /// Advantages are normalized over the whole batch first.
    pub fn update<R: Rng + ?Sized>(&mut self, batch: &[PpoSample], rng: &mut R) -> Result<PpoStats> {
        if batch.is_empty() {
            return Err(Error::IllegalAction("PPO update on an empty batch".into()));
        }
        let samples = normalize_advantages(batch);
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut stats = PpoStats::default();
        let mut grad = vec![0.0; self.net.params().len()];
        for epoch in 0..self.hyper.epochs {
            order.shuffle(rng);
            for (mb_index, chunk) in order.chunks(self.hyper.batch_size).enumerate() {
                let mb: Vec<PpoSample> = chunk.iter().map(|&i| samples[i].clone()).collect();
                grad.iter_mut().for_each(|g| *g = 0.0);
                let parts = ppo_loss(&self.net, &mb, &self.hyper, Some(&mut grad))?;
                if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
                    return Err(Error::NonFiniteGradient { index });
                }
                if epoch == 0 && mb_index == 0 {
                    stats.initial_clip_fraction = parts.clip_fraction;
                }
                self.adam.step(self.net.params_mut(), &grad);
                stats.policy_loss += parts.policy;
                stats.value_loss += parts.value;
                stats.entropy += parts.entropy;
                stats.clip_fraction += parts.clip_fraction;
                stats.approx_kl += parts.approx_kl;
                stats.minibatches += 1;
            }
        }
        let m = stats.minibatches as f64;
        stats.policy_loss /= m;
        stats.value_loss /= m;
        stats.entropy /= m;
        stats.clip_fraction /= m;
        stats.approx_kl /= m;
        Ok(stats)
    }
}

/// Shifts and scales advantages to zero mean and unit deviation; the
/// deviation is floored at 1e-8.
pub fn normalize_advantages(batch: &[PpoSample]) -> Vec<PpoSample> {
    let n = batch.len() as f64;
    let mean = batch.iter().map(|s| s.advantage).sum::<f64>() / n;
    let var = batch.iter().map(|s| (s.advantage - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    batch
        .iter()
        .map(|s| PpoSample {
            advantage: (s.advantage - mean) / std,
            ..s.clone()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::nn::MlpShape;
    use crate::rng::rng_from_seed;

    /// Direct sum form: A_t = sum_l (gamma lambda)^l delta_{t+l}, truncated
    /// at the first terminal step.
    fn gae_oracle(r: &[f64], v: &[f64], d: &[bool], g: f64, l: f64) -> Vec<f64> {
        let n = r.len();
        (0..n)
            .map(|t| {
                let mut total = 0.0;
                let mut w = 1.0;
                for k in t..n {
                    let live = if d[k] { 0.0 } else { 1.0 };
                    total += w * (r[k] + g * v[k + 1] * live - v[k]);
                    if d[k] {
                        break;
                    }
                    w *= g * l;
                }
                total
            })
            .collect()
    }

    #[test]
    fn gae_single_terminal_step() {
        let (a, r) = gae(&[1.0], &[0.0, 0.0], &[true], 0.99, 0.95);
        assert_eq!(a, vec![1.0]);
        assert_eq!(r, vec![1.0]);
    }

    #[test]
    fn gae_lambda_zero_is_td_error() {
        let rewards = [0.5, -1.0, 2.0];
        let values = [0.1, 0.2, 0.3, 0.4];
        let (a, _) = gae(&rewards, &values, &[false; 3], 0.9, 0.0);
        for t in 0..3 {
            let td = rewards[t] + 0.9 * values[t + 1] - values[t];
            assert!((a[t] - td).abs() < 1e-15);
        }
    }

    #[test]
    fn gae_two_step_hand_unroll() {
        let (a, ret) = gae(&[1.0, 1.0], &[0.5, 0.5, 0.0], &[false, true], 0.99, 0.95);
        // delta_1 = 1 - 0.5; delta_0 = 1 + 0.99 * 0.5 - 0.5; A_0 = delta_0 + 0.99 * 0.95 * A_1
        assert!((a[1] - 0.5).abs() < 1e-15);
        assert!((a[0] - 1.46525).abs() < 1e-12, "{}", a[0]);
        assert!((ret[0] - 1.96525).abs() < 1e-12);
        let oracle = gae_oracle(&[1.0, 1.0], &[0.5, 0.5, 0.0], &[false, true], 0.99, 0.95);
        assert!((a[0] - oracle[0]).abs() < 1e-15);
    }

    #[test]
    fn gae_matches_direct_sum_on_random_rollouts() {
        let mut rng = rng_from_seed(5);
        for _ in 0..50 {
            let n = rng.gen_range(1..30);
            let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let d: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.2)).collect();
            let (a, _) = gae(&r, &v, &d, 0.97, 0.9);
            let o = gae_oracle(&r, &v, &d, 0.97, 0.9);
            for (x, y) in a.iter().zip(&o) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    fn toy_batch(net: &ActorCritic, n: usize, seed: u64) -> Vec<PpoSample> {
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| {
                let obs: Vec<f64> = (0..net.shape().input).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mask = vec![true; net.shape().actions];
                let logits = net.forward(&obs).unwrap().logits;
                let action = rng.gen_range(0..net.shape().actions);
                PpoSample {
                    log_prob_old: log_softmax(&logits, &mask)[action],
                    observation: obs,
                    mask,
                    action,
                    advantage: rng.gen_range(-1.0..1.0),
                    ret: rng.gen_range(-1.0..1.0),
                }
            })
            .collect()
    }

    #[test]
    fn fresh_policy_has_zero_clip_fraction() {
        let net = ActorCritic::init(MlpShape::new(6, vec![8, 8], 4), &mut rng_from_seed(0));
        let batch = toy_batch(&net, 32, 1);
        let mut learner = PpoLearner::new(net, PpoHyper { batch_size: 32, ..PpoHyper::default() });
        let stats = learner.update(&batch, &mut rng_from_seed(2)).unwrap();
        assert_eq!(stats.initial_clip_fraction, 0.0);
        assert!(learner.net.params().iter().all(|p| p.is_finite()));
    }

    #[test]
    fn zero_signal_leaves_parameters_unchanged() {
        let net = ActorCritic::init(MlpShape::new(6, vec![8, 8], 4), &mut rng_from_seed(0));
        let mut batch = toy_batch(&net, 16, 3);
        for s in &mut batch {
            s.advantage = 0.0;
        }
        let hyper = PpoHyper {
            value_coeff: 0.0,
            entropy_coeff: 0.0,
            batch_size: 8,
            ..PpoHyper::default()
        };
        let before = net.params().to_vec();
        let mut learner = PpoLearner::new(net, hyper);
        learner.update(&batch, &mut rng_from_seed(4)).unwrap();
        assert_eq!(learner.net.params(), before.as_slice());
    }

    #[test]
    fn empty_batch_is_rejected() {
        let net = ActorCritic::init(MlpShape::new(2, vec![4], 2), &mut rng_from_seed(0));
        let mut learner = PpoLearner::new(net, PpoHyper::default());
        assert!(learner.update(&[], &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let shape = MlpShape::new(2, vec![3], 2);
        let mut net = ActorCritic::init(shape, &mut rng_from_seed(0));
        net.params_mut()[0] = f64::NAN;
        let batch = vec![PpoSample {
            observation: vec![1.0, 1.0],
            mask: vec![true, true],
            action: 0,
            log_prob_old: (0.5f64).ln(),
            advantage: 1.0,
            ret: 0.0,
        }];
        let before = net.params().to_vec();
        let mut learner = PpoLearner::new(net, PpoHyper::default());
        let err = learner.update(&batch, &mut rng_from_seed(0)).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { .. }));
        assert_eq!(learner.net.params()[1..], before[1..]);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut adam = Adam::new(3, 0.1);
        let mut p = vec![1.0, 1.0, 1.0];
        adam.step(&mut p, &[2.0, -0.5, 0.0]);
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] - 1.1).abs() < 1e-6);
        assert_eq!(p[2], 1.0);
    }

    #[test]
    fn log_softmax_masks() {
        let l = log_softmax(&[1.0, 2.0, 3.0], &[true, false, true]);
        assert_eq!(l[1], f64::NEG_INFINITY);
        assert!((l[0].exp() + l[2].exp() - 1.0).abs() < 1e-15);
    }

    fn perturbed_batch(net: &ActorCritic, n: usize, seed: u64) -> Vec<PpoSample> {
        let mut batch = toy_batch(net, n, seed);
        let mut rng = rng_from_seed(seed + 100);
        for s in &mut batch {
            // ratios spread on both sides of the clip window
            s.log_prob_old += rng.gen_range(-0.5..0.5);
        }
        batch
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let hyper = PpoHyper {
            value_coeff: 0.5,
            entropy_coeff: 0.05,
            ..PpoHyper::default()
        };
        for seed in 0..5 {
            let mut net = ActorCritic::init(MlpShape::new(4, vec![8, 8], 3), &mut rng_from_seed(seed));
            let mut rng = rng_from_seed(seed + 50);
            for p in net.params_mut() {
                *p += rng.gen_range(-0.3..0.3);
            }
            let batch = perturbed_batch(&net, 6, seed + 20);
            let mut grad = vec![0.0; net.params().len()];
            ppo_loss(&net, &batch, &hyper, Some(&mut grad)).unwrap();
            let h = 1e-6;
            for i in 0..grad.len() {
                let orig = net.params()[i];
                net.params_mut()[i] = orig + h;
                let up = ppo_loss(&net, &batch, &hyper, None).unwrap().total(&hyper);
                net.params_mut()[i] = orig - h;
                let down = ppo_loss(&net, &batch, &hyper, None).unwrap().total(&hyper);
                net.params_mut()[i] = orig;
                let fd = (up - down) / (2.0 * h);
                assert!(
                    (fd - grad[i]).abs() <= 1e-6_f64.max(1e-3 * fd.abs()),
                    "seed {seed} param {i}: fd {fd} analytic {}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn unclipped_single_epoch_is_vanilla_policy_gradient() {
        let net = ActorCritic::init(MlpShape::new(5, vec![8, 8], 4), &mut rng_from_seed(11));
        let batch = toy_batch(&net, 20, 12);
        let hyper = PpoHyper {
            clip_epsilon: f64::INFINITY,
            epochs: 1,
            batch_size: 20,
            value_coeff: 0.0,
            entropy_coeff: 0.0,
            learning_rate: 1e-3,
            ..PpoHyper::default()
        };

        // reference: gradient of -mean(A log pi(a|s)) then one Adam step
        let normalized = normalize_advantages(&batch);
        let mut grad = vec![0.0; net.params().len()];
        for s in &normalized {
            let cache = net.forward(&s.observation).unwrap();
            let probs = crate::agents::masked_softmax(&cache.logits, &s.mask);
            let d: Vec<f64> = probs
                .iter()
                .enumerate()
                .map(|(j, p)| -s.advantage * ((j == s.action) as u8 as f64 - p) / 20.0)
                .collect();
            net.backward(&cache, &d, 0.0, &mut grad);
        }
        let mut expected = net.params().to_vec();
        Adam::new(expected.len(), 1e-3).step(&mut expected, &grad);

        let mut learner = PpoLearner::new(net, hyper);
        learner.update(&batch, &mut rng_from_seed(0)).unwrap();
        for (a, b) in learner.net.params().iter().zip(&expected) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-12), "{a} vs {b}");
        }
    }
}
