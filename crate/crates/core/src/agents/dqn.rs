use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::policy::{compute_targets, epsilon_at, masked_argmax, select_action, AgentMode};
use super::replay::{ReplayBuffer, Transition};
use super::{AgentConfig, AgentError};
use crate::derive_seed;
use crate::junction::{JunctionAction, TerminationReason};
use crate::metrics::EpisodeRecord;
use crate::neural::Mlp;
use crate::wrapper::{ActionMask, ConstraintWrapper, WrapperMode};

/// Online and target Q-networks with their configuration.
#[derive(Debug, Clone)]
pub struct Agent {
    pub config: AgentConfig,
    pub online: Mlp,
    pub target: Mlp,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        config: AgentConfig,
        rng: &mut R,
    ) -> Result<Self, AgentError> {
        config.validate()?;
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(&config.hidden);
        sizes.push(JunctionAction::COUNT);
        let online = Mlp::new(&sizes, rng)?;
        let target = online.clone();
        Ok(Agent {
            config,
            online,
            target,
        })
    }

    /// Wraps an already trained network, e.g. one loaded from disk.
    pub fn from_model(config: AgentConfig, model: Mlp) -> Self {
        Agent {
            config,
            target: model.clone(),
            online: model,
        }
    }

    pub fn mode(&self) -> AgentMode {
        self.config.mode
    }

    pub fn act<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        mask: &ActionMask,
        eps: f64,
        rng: &mut R,
    ) -> Result<usize, AgentError> {
        select_action(&self.online, state, mask, eps, rng, self.config.mode)
    }

    /// Deterministic greedy action; no randomness consumed.
    pub fn greedy(&self, state: &[f64], mask: &ActionMask) -> Result<usize, AgentError> {
        let q = self.online.forward(state)?;
        let m = match self.config.mode {
            AgentMode::PnCdqn => Some(mask),
            AgentMode::Dqn => None,
        };
        masked_argmax(&q, m).ok_or(AgentError::EmptyMask)
    }

    fn train_step(&mut self, buffer: &ReplayBuffer, rng: &mut ChaCha8Rng) -> Result<f64, AgentError> {
        let batch = buffer.sample(rng, self.config.batch_size);
        let targets = compute_targets(&self.target, &batch, self.config.gamma, self.config.mode)?;
        let inputs: Vec<&[f64]> = batch.iter().map(|t| t.state.as_slice()).collect();
        let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
        let loss = self
            .online
            .train_batch(&inputs, &actions, &targets, self.config.lr)?;
        self.target.sync_from(&self.online, self.config.tau)?;
        Ok(loss)
    }
}

/// One finished training episode.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLogRow {
    pub episode: usize,
    /// Global step count when the episode ended.
    pub end_step: u64,
    pub episode_length: u64,
    pub episode_return: f64,
    pub violations_requested: u64,
    pub violations_rate: f64,
}

impl TrainingLogRow {
    pub const CSV_HEADER: &'static str =
        "episode,end_step,episode_length,return,violations_requested,violations_rate";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.episode,
            self.end_step,
            self.episode_length,
            self.episode_return,
            self.violations_requested,
            self.violations_rate
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub agent: Agent,
    pub log: Vec<TrainingLogRow>,
    pub steps: u64,
}

impl TrainOutput {
    pub fn log_csv(&self) -> String {
        let mut s = String::from(TrainingLogRow::CSV_HEADER);
        s.push('\n');
        for r in &self.log {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }
}

/// Junction seed of training episode `episode`.
pub fn training_episode_seed(seed: u64, episode: usize) -> u64 {
    derive_seed(derive_seed(seed, 2), episode as u64)
}

/// Runs episodes until `max_steps` environment steps have been taken. An
/// episode still running at the step budget is not logged.
pub fn train_loop(
    wrapper: &mut ConstraintWrapper,
    mut agent: Agent,
    seed: u64,
) -> Result<TrainOutput, AgentError> {
    let cfg = agent.config.clone();
    match (cfg.mode, wrapper.mode()) {
        (AgentMode::PnCdqn, WrapperMode::Mask) => {}
        (AgentMode::Dqn, WrapperMode::Penalty | WrapperMode::Shield) => {}
        (m, w) => {
            return Err(AgentError::Config(format!(
                "{} agent cannot train under {w:?} wrapper mode",
                m.label()
            )))
        }
    }
    let encoder = wrapper.encoder();
    if agent.online.input_dim() != encoder.dim() {
        return Err(AgentError::Config(format!(
            "network input {} does not match state size {}",
            agent.online.input_dim(),
            encoder.dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut log = Vec::new();
    let mut step = 0u64;
    let mut episode = 0usize;

    if cfg.max_steps == 0 {
        return Ok(TrainOutput {
            agent,
            log,
            steps: 0,
        });
    }

    let cs = wrapper.reset(training_episode_seed(seed, episode))?;
    let mut state = encoder.encode(&cs);
    let mut mask = wrapper.valid_mask();
    let mut rec = EpisodeRecord::default();

    while step < cfg.max_steps {
        let eps = if step < cfg.random_steps {
            1.0
        } else {
            epsilon_at(step, &cfg)
        };
        let a = agent.act(&state, &mask, eps, &mut rng)?;
        let action = JunctionAction::from_index(a).expect("action index in range");
        let res = wrapper.step(action)?;
        let next_state = encoder.encode(&res.next);
        let done = res.info.terminated.is_some();
        let cut = match res.info.terminated {
            Some(TerminationReason::Overflow) => !cfg.bootstrap_on_overflow,
            Some(TerminationReason::EpisodeCap) => true,
            None => false,
        };
        rec.record(&res.info, res.constraint_fulfilled, res.reward);
        buffer.push(Transition {
            state,
            action: a,
            reward: res.reward * cfg.reward_scale,
            next_state: next_state.clone(),
            done: cut,
            next_valid_mask: res.next_valid,
            violated: !res.constraint_fulfilled,
        });
        step += 1;

        if step > cfg.learning_starts
            && step % cfg.train_every == 0
            && buffer.len() >= cfg.batch_size
        {
            agent.train_step(&buffer, &mut rng)?;
        }

        if done {
            log.push(TrainingLogRow {
                episode,
                end_step: step,
                episode_length: rec.end_step,
                episode_return: rec.episode_return(),
                violations_requested: rec.violations_requested,
                violations_rate: rec.violation_rate(),
            });
            log::debug!(
                "episode {episode} length {} return {:.1}",
                rec.end_step,
                rec.episode_return()
            );
            episode += 1;
            rec = EpisodeRecord::default();
            let cs = wrapper.reset(training_episode_seed(seed, episode))?;
            state = encoder.encode(&cs);
            mask = wrapper.valid_mask();
        } else {
            state = next_state;
            mask = res.next_valid;
        }
    }
    Ok(TrainOutput {
        agent,
        log,
        steps: step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::junction::JunctionConfig;
    use crate::metrics::RewardWeights;
    use crate::petri::traffic_light_net;
    use std::sync::Arc;

    fn setup(mode: AgentMode, max_steps: u64) -> (ConstraintWrapper, Agent) {
        let wmode = match mode {
            AgentMode::PnCdqn => WrapperMode::Mask,
            AgentMode::Dqn => WrapperMode::Penalty,
        };
        let w0 = if mode == AgentMode::Dqn { 1.0 } else { 0.0 };
        let wrapper = ConstraintWrapper::junction(
            Arc::new(traffic_light_net()),
            wmode,
            RewardWeights::new(w0, 0.0, 1.0, 1.5, 0.0),
            JunctionConfig::default(),
        )
        .unwrap();
        let cfg = AgentConfig {
            mode,
            max_steps,
            random_steps: 200,
            learning_starts: 200,
            epsilon_decay_steps: 1_000,
            hidden: vec![16],
            ..AgentConfig::desk()
        };
        let agent = Agent::new(25, cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        (wrapper, agent)
    }

    #[test]
    fn zero_steps_returns_untrained_model() {
        let (mut w, agent) = setup(AgentMode::PnCdqn, 0);
        let before: Vec<f64> = agent.online.params().collect();
        let out = train_loop(&mut w, agent, 3).unwrap();
        assert!(out.log.is_empty());
        assert_eq!(out.agent.online.params().collect::<Vec<_>>(), before);
    }

    #[test]
    fn pn_cdqn_training_never_violates() {
        let (mut w, agent) = setup(AgentMode::PnCdqn, 3_000);
        let out = train_loop(&mut w, agent, 5).unwrap();
        assert!(!out.log.is_empty());
        assert!(out.log.iter().all(|r| r.violations_requested == 0));
    }

    #[test]
    fn dqn_explores_invalid_actions() {
        let (mut w, agent) = setup(AgentMode::Dqn, 2_000);
        let out = train_loop(&mut w, agent, 5).unwrap();
        assert!(out.log.iter().any(|r| r.violations_requested > 0));
    }

    #[test]
    fn same_seed_same_log() {
        let run = || {
            let (mut w, agent) = setup(AgentMode::PnCdqn, 2_000);
            let out = train_loop(&mut w, agent, 9).unwrap();
            (out.log_csv(), out.agent.online.params().collect::<Vec<_>>())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let (_, agent) = setup(AgentMode::PnCdqn, 10);
        let mut w = ConstraintWrapper::junction(
            Arc::new(traffic_light_net()),
            WrapperMode::Penalty,
            RewardWeights::default(),
            JunctionConfig::default(),
        )
        .unwrap();
        assert!(matches!(train_loop(&mut w, agent, 1), Err(AgentError::Config(_))));
    }
}
