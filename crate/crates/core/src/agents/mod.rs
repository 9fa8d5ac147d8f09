//! Policies and learners: PPO actor-critic, linear SARSA and a uniform
//! random baseline behind one [`Policy`] interface.

pub mod nn;
pub mod ppo;
pub mod sarsa;
mod train;

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, RngCore};

pub use nn::{ActorCritic, MlpShape};
pub use ppo::{gae, Adam, PpoHyper, PpoLearner, PpoSample, PpoStats, Transition};
pub use sarsa::{LinearQ, SarsaHyper};
pub use train::{train, CurvePoint, TrainOptions, TrainOutcome, EPISODE_STREAM};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Ppo,
    Sarsa,
    Random,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [AgentKind::Ppo, AgentKind::Sarsa, AgentKind::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Ppo => "ppo",
            AgentKind::Sarsa => "sarsa",
            AgentKind::Random => "random",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppo" => Ok(AgentKind::Ppo),
            "sarsa" => Ok(AgentKind::Sarsa),
            "random" => Ok(AgentKind::Random),
            other => Err(Error::config("agent", format!("unknown agent `{other}`"))),
        }
    }
}

/// How an action is drawn from a score vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionMode {
    /// Sample from the masked softmax.
    Sample,
    /// Highest score, lowest id on ties.
    Greedy,
    /// Uniform with probability `epsilon`, greedy otherwise.
    EpsilonGreedy(f64),
    /// Uniform over allowed actions.
    Random,
}

/// Masked softmax; disallowed actions get probability exactly zero.
pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits
        .iter()
        .zip(mask)
        .map(|(l, &m)| if m { (l - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn select_action(
    scores: &[f64],
    mask: &[bool],
    mode: ActionMode,
    rng: &mut dyn RngCore,
) -> Result<usize> {
    if scores.len() != mask.len() {
        return Err(Error::DimensionMismatch {
            expected: mask.len(),
            found: scores.len(),
        });
    }
    let allowed: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    if allowed.is_empty() {
        return Err(Error::IllegalAction("no action is allowed by the mask".into()));
    }
    let greedy = || {
        allowed
            .iter()
            .copied()
            .fold(None::<usize>, |best, i| match best {
                Some(b) if scores[b] >= scores[i] => Some(b),
                _ => Some(i),
            })
            .expect("allowed is non-empty")
    };
    let uniform = |rng: &mut dyn RngCore| allowed[rng.gen_range(0..allowed.len())];
    Ok(match mode {
        ActionMode::Greedy => greedy(),
        ActionMode::Random => uniform(rng),
        ActionMode::EpsilonGreedy(eps) => {
            if rng.gen::<f64>() < eps {
                uniform(rng)
            } else {
                greedy()
            }
        }
        ActionMode::Sample => {
            let probs = masked_softmax(scores, mask);
            WeightedIndex::new(&probs)
                .map_err(|e| Error::IllegalAction(format!("bad action distribution: {e}")))?
                .sample(rng)
        }
    })
}

/// Architecture descriptor stored next to the flat parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Architecture {
    /// Tanh MLP trunk with logit and value heads.
    ActorCritic(MlpShape),
    /// One affine Q function per action over the observation.
    LinearQ { input: usize, actions: usize },
    /// Parameter-free uniform policy.
    Uniform { input: usize, actions: usize },
}

impl Architecture {
    pub fn param_count(&self) -> usize {
        match self {
            Architecture::ActorCritic(shape) => shape.param_count(),
            Architecture::LinearQ { input, actions } => actions * (input + 1),
            Architecture::Uniform { .. } => 0,
        }
    }

    pub fn actions(&self) -> usize {
        match self {
            Architecture::ActorCritic(shape) => shape.actions,
            Architecture::LinearQ { actions, .. } | Architecture::Uniform { actions, .. } => *actions,
        }
    }

    pub fn input(&self) -> usize {
        match self {
            Architecture::ActorCritic(shape) => shape.input,
            Architecture::LinearQ { input, .. } | Architecture::Uniform { input, .. } => *input,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Architecture::ActorCritic(s) => {
                let hidden: Vec<String> = s.hidden.iter().map(usize::to_string).collect();
                write!(f, "mlp:{}:{}:{}:tanh", s.input, hidden.join("-"), s.actions)
            }
            Architecture::LinearQ { input, actions } => write!(f, "linear:{input}:{actions}"),
            Architecture::Uniform { input, actions } => write!(f, "uniform:{input}:{actions}"),
        }
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::CheckpointCorrupted(format!("bad architecture `{s}`"));
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["mlp", input, hidden, actions, "tanh"] => {
                let hidden = if hidden.is_empty() {
                    Vec::new()
                } else {
                    hidden.split('-').map(num).collect::<Result<_>>()?
                };
                Ok(Architecture::ActorCritic(MlpShape::new(num(input)?, hidden, num(actions)?)))
            }
            ["linear", input, actions] => Ok(Architecture::LinearQ {
                input: num(input)?,
                actions: num(actions)?,
            }),
            ["uniform", input, actions] => Ok(Architecture::Uniform {
                input: num(input)?,
                actions: num(actions)?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Flat parameter vector plus the architecture that interprets it.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParameters {
    pub architecture: Architecture,
    pub values: Vec<f64>,
}

impl PolicyParameters {
    pub fn new(architecture: Architecture, values: Vec<f64>) -> Result<Self> {
        if values.len() != architecture.param_count() {
            return Err(Error::DimensionMismatch {
                expected: architecture.param_count(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::CheckpointCorrupted(format!("parameter {i} is not finite")));
        }
        Ok(PolicyParameters {
            architecture,
            values,
        })
    }

    pub fn param_count(&self) -> usize {
        self.values.len()
    }
}

/// Anything that maps an observation and an action mask to an action.
pub trait Policy {
    fn act(&self, obs: &[f64], mask: &[bool], mode: ActionMode, rng: &mut dyn RngCore)
        -> Result<usize>;
}

/// A trained or untrained agent of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Agent {
    Ppo(ActorCritic),
    Sarsa(LinearQ),
    Random { input: usize, actions: usize },
}

impl Agent {
    pub fn kind(&self) -> AgentKind {
        match self {
            Agent::Ppo(_) => AgentKind::Ppo,
            Agent::Sarsa(_) => AgentKind::Sarsa,
            Agent::Random { .. } => AgentKind::Random,
        }
    }

    pub fn parameters(&self) -> PolicyParameters {
        match self {
            Agent::Ppo(net) => PolicyParameters {
                architecture: Architecture::ActorCritic(net.shape().clone()),
                values: net.params().to_vec(),
            },
            Agent::Sarsa(q) => PolicyParameters {
                architecture: Architecture::LinearQ {
                    input: q.input(),
                    actions: q.actions(),
                },
                values: q.weights().to_vec(),
            },
            Agent::Random { input, actions } => PolicyParameters {
                architecture: Architecture::Uniform {
                    input: *input,
                    actions: *actions,
                },
                values: Vec::new(),
            },
        }
    }

    pub fn from_parameters(params: PolicyParameters) -> Result<Self> {
        Ok(match params.architecture {
            Architecture::ActorCritic(shape) => Agent::Ppo(ActorCritic::from_params(shape, params.values)?),
            Architecture::LinearQ { input, actions } => {
                Agent::Sarsa(LinearQ::from_weights(input, actions, params.values)?)
            }
            Architecture::Uniform { input, actions } => Agent::Random { input, actions },
        })
    }

    /// Per-action scores: logits for PPO, Q-values for SARSA, zeros for random.
    pub fn scores(&self, obs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Agent::Ppo(net) => Ok(net.forward(obs)?.logits),
            Agent::Sarsa(q) => q.values(obs),
            Agent::Random { input, actions } => {
                if obs.len() != *input {
                    return Err(Error::DimensionMismatch {
                        expected: *input,
                        found: obs.len(),
                    });
                }
                Ok(vec![0.0; *actions])
            }
        }
    }
}

impl Policy for Agent {
    fn act(&self, obs: &[f64], mask: &[bool], mode: ActionMode, rng: &mut dyn RngCore) -> Result<usize> {
        let mode = match self {
            Agent::Random { .. } => ActionMode::Random,
            _ => mode,
        };
        select_action(&self.scores(obs)?, mask, mode, rng)
    }
}
