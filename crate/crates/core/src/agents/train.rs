use super::nn::{ActorCritic, MlpShape};
use super::ppo::{log_softmax, PpoHyper, PpoLearner, PpoSample, PpoStats, Transition};
use super::sarsa::{LinearQ, SarsaHyper};
use super::{select_action, ActionMode, Agent, AgentKind};
use crate::env::{EnvConfig, ScenarioState};
use crate::error::Result;
use crate::rng::{derive_seed, rng_from_seed};

/// Stream tag for per-episode reset seeds.
pub const EPISODE_STREAM: u64 = 0xE9_150D;
const INIT_STREAM: u64 = 0x1_417;
const ACTION_STREAM: u64 = 0xAC_7;
const UPDATE_STREAM: u64 = 0x0_9DA7E;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub agent: AgentKind,
    /// Environment steps.
    pub budget_steps: usize,
    pub seed: u64,
    pub ppo: PpoHyper,
    pub sarsa: SarsaHyper,
}

impl TrainOptions {
    pub fn new(agent: AgentKind, budget_steps: usize, seed: u64) -> Self {
        TrainOptions {
            agent,
            budget_steps,
            seed,
            ppo: PpoHyper::default(),
            sarsa: SarsaHyper::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Environment steps completed at the end of the window.
    pub step: usize,
    pub mean_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub agent: Agent,
    pub curve: Vec<CurvePoint>,
    pub seed: u64,
    pub steps: usize,
    /// One entry per PPO update.
    pub ppo_stats: Vec<PpoStats>,
}

/// Episodic training loop. Curve windows are `ppo.rollout_length` steps
/// for every agent kind so the curves line up.
pub fn train(config: &EnvConfig, opts: &TrainOptions) -> Result<TrainOutcome> {
    config.validate()?;
    opts.ppo.validate()?;
    opts.sarsa.validate()?;
    let k = config.n_cells();
    let input = k * crate::env::FEATURES_PER_CELL;
    let mut init_rng = rng_from_seed(derive_seed(opts.seed, &[INIT_STREAM]));
    let mut act_rng = rng_from_seed(derive_seed(opts.seed, &[ACTION_STREAM]));
    let mut upd_rng = rng_from_seed(derive_seed(opts.seed, &[UPDATE_STREAM]));

    let mut learner = match opts.agent {
        AgentKind::Ppo => {
            let shape = MlpShape::new(input, opts.ppo.hidden.clone(), k);
            Some(PpoLearner::new(ActorCritic::init(shape, &mut init_rng), opts.ppo.clone()))
        }
        _ => None,
    };
    let mut q = LinearQ::zeros(input, k);

    let window = opts.ppo.rollout_length;
    let mut curve = Vec::new();
    let mut window_rewards: Vec<f64> = Vec::with_capacity(window);
    let mut rollout: Vec<Transition> = Vec::with_capacity(window);
    let mut ppo_stats = Vec::new();
    let mut steps = 0usize;
    let mut episode = 0u64;

    while steps < opts.budget_steps {
        let mut state = ScenarioState::reset(config, derive_seed(opts.seed, &[EPISODE_STREAM, episode]))?;
        episode += 1;
        let mut obs = state.observe();
        let mut mask = state.active().to_vec();
        // SARSA carries the chosen next action across steps
        let mut pending: Option<usize> = None;

        while !state.is_done() && steps < opts.budget_steps {
            let (action, log_prob, value) = match opts.agent {
                AgentKind::Ppo => {
                    let net = &learner.as_ref().expect("ppo learner").net;
                    let out = net.forward(&obs)?;
                    let a = select_action(&out.logits, &mask, ActionMode::Sample, &mut act_rng)?;
                    (a, log_softmax(&out.logits, &mask)[a], out.value)
                }
                AgentKind::Sarsa => {
                    let a = match pending.take() {
                        Some(a) => a,
                        None => {
                            let eps = opts.sarsa.epsilon_at(steps, opts.budget_steps);
                            select_action(&q.values(&obs)?, &mask, ActionMode::EpsilonGreedy(eps), &mut act_rng)?
                        }
                    };
                    (a, 0.0, 0.0)
                }
                AgentKind::Random => (
                    select_action(&vec![0.0; k], &mask, ActionMode::Random, &mut act_rng)?,
                    0.0,
                    0.0,
                ),
            };

            let result = state.step(action)?;
            steps += 1;
            let next_mask = state.active().to_vec();

            match opts.agent {
                AgentKind::Ppo => rollout.push(Transition {
                    observation: obs.clone(),
                    mask: mask.clone(),
                    action,
                    reward: result.reward,
                    next_observation: result.observation.clone(),
                    done: result.done,
                    log_prob,
                    value,
                }),
                AgentKind::Sarsa => {
                    let next = if result.done {
                        None
                    } else {
                        let eps = opts.sarsa.epsilon_at(steps, opts.budget_steps);
                        let a = select_action(
                            &q.values(&result.observation)?,
                            &next_mask,
                            ActionMode::EpsilonGreedy(eps),
                            &mut act_rng,
                        )?;
                        pending = Some(a);
                        Some(a)
                    };
                    q.update(
                        &obs,
                        action,
                        result.reward,
                        next.map(|a| (result.observation.as_slice(), a)),
                        result.done,
                        opts.sarsa.learning_rate,
                        opts.sarsa.gamma,
                    )?;
                }
                AgentKind::Random => {}
            }

            window_rewards.push(result.reward);
            let budget_end = steps == opts.budget_steps;
            if window_rewards.len() == window || budget_end {
                if let Some(l) = learner.as_mut() {
                    let last = rollout.last().expect("rollout is non-empty");
                    let bootstrap = if last.done {
                        0.0
                    } else {
                        l.net.forward(&last.next_observation)?.value
                    };
                    let samples =
                        PpoSample::from_rollout(&rollout, bootstrap, opts.ppo.gamma, opts.ppo.gae_lambda);
                    ppo_stats.push(l.update(&samples, &mut upd_rng)?);
                    rollout.clear();
                }
                curve.push(CurvePoint {
                    step: steps,
                    mean_reward: window_rewards.iter().sum::<f64>() / window_rewards.len() as f64,
                });
                window_rewards.clear();
            }

            obs = result.observation;
            mask = next_mask;
        }
    }

    let agent = match opts.agent {
        AgentKind::Ppo => {
            let net = match learner {
                Some(l) => l.net,
                None => unreachable!("ppo learner exists"),
            };
            Agent::Ppo(net)
        }
        AgentKind::Sarsa => Agent::Sarsa(q),
        AgentKind::Random => Agent::Random { input, actions: k },
    };
    Ok(TrainOutcome {
        agent,
        curve,
        seed: opts.seed,
        steps,
        ppo_stats,
    })
}
