use std::fmt::Write as _;

use crate::agents::{Agent, AgentError, BaselineCycle};
use crate::derive_seed;
use crate::junction::{JunctionAction, StepInfo};
use crate::metrics::{EpisodeRecord, EpisodeStats, EvalSummary};
use crate::wrapper::{ActionMask, ConstraintWrapper, WrappedStepResult, WrapperMode};

/// Something that requests one junction action per step.
pub trait Controller {
    fn reset(&mut self) {}
    fn request(&mut self, state: &[f64], mask: &ActionMask) -> Result<JunctionAction, AgentError>;
}

/// Greedy (ε = 0) policy of a trained agent.
impl Controller for Agent {
    fn request(&mut self, state: &[f64], mask: &ActionMask) -> Result<JunctionAction, AgentError> {
        let a = self.greedy(state, mask)?;
        Ok(JunctionAction::from_index(a).expect("action index in range"))
    }
}

impl Controller for BaselineCycle {
    fn reset(&mut self) {
        BaselineCycle::reset(self);
    }

    fn request(&mut self, _: &[f64], _: &ActionMask) -> Result<JunctionAction, AgentError> {
        Ok(self.next_action())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub episodes: usize,
    pub seed: u64,
    pub trace: bool,
    pub violation_log: bool,
}

impl EvalOptions {
    pub fn new(episodes: usize, seed: u64) -> Self {
        EvalOptions {
            episodes,
            seed,
            trace: false,
            violation_log: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalOutput {
    pub episodes: Vec<EpisodeStats>,
    /// `episode,` followed by the step trace columns.
    pub trace: Option<String>,
    /// `episode,` followed by the violation log columns.
    pub violations: Option<String>,
}

impl EvalOutput {
    pub fn summary(&self, model: &str, params: &str) -> EvalSummary {
        EvalSummary::from_episodes(model, params, &self.episodes)
    }

    pub fn episodes_csv(&self) -> String {
        let mut s = format!("{}\n", EpisodeStats::CSV_HEADER);
        for e in &self.episodes {
            s.push_str(&e.csv_row());
            s.push('\n');
        }
        s
    }
}

/// Junction seed of evaluation episode `episode`.
pub fn eval_episode_seed(seed: u64, episode: usize) -> u64 {
    derive_seed(derive_seed(seed, 3), episode as u64)
}

/// Runs `opts.episodes` episodes in shield mode. Violations are counted on the
/// controller's requested actions, before shielding.
pub fn evaluate<C: Controller>(
    wrapper: &mut ConstraintWrapper,
    controller: &mut C,
    opts: EvalOptions,
) -> Result<EvalOutput, AgentError> {
    wrapper.set_mode(WrapperMode::Shield);
    let encoder = wrapper.encoder();
    let mut out = EvalOutput {
        trace: opts
            .trace
            .then(|| format!("episode,{}\n", StepInfo::CSV_HEADER)),
        violations: opts
            .violation_log
            .then(|| format!("episode,{}\n", WrappedStepResult::VIOLATION_CSV_HEADER)),
        ..EvalOutput::default()
    };
    for ep in 0..opts.episodes {
        let mut cs = wrapper.reset(eval_episode_seed(opts.seed, ep))?;
        controller.reset();
        let mut rec = EpisodeRecord::default();
        while !wrapper.is_done() {
            let state = encoder.encode(&cs);
            let requested = controller.request(&state, &wrapper.valid_mask())?;
            let res = wrapper.step(requested)?;
            rec.record(&res.info, res.constraint_fulfilled, res.reward);
            if let Some(t) = out.trace.as_mut() {
                let _ = writeln!(t, "{ep},{}", res.info.csv_row());
            }
            if !res.constraint_fulfilled {
                if let Some(v) = out.violations.as_mut() {
                    let _ = writeln!(v, "{ep},{}", res.violation_csv_row());
                }
            }
            cs = res.next;
        }
        out.episodes.push(EpisodeStats::from_record(ep, &rec));
    }
    Ok(out)
}
