//! Constraint wrapper: couples a [`Junction`] with a Petri net whose enabled
//! transitions define the valid actions.
//!
//! The net is authoritative. After every step the wrapper checks that the
//! marking and the junction phase agree through the place mapping.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::junction::{
    Group, Junction, JunctionAction, JunctionConfig, JunctionError, Observation, SignalPhase,
    StepInfo, OBSERVATION_LEN,
};
use crate::metrics::{compute_reward, RewardWeights};
use crate::petri::{Marking, NetError, PetriNet, TransitionId};

#[derive(Debug, Error)]
pub enum WrapperError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Junction(#[from] JunctionError),
    #[error("action mapping: {0}")]
    Mapping(String),
    #[error("marking {marking} out of sync with junction phase {phase:?} at step {step}")]
    OutOfSync {
        marking: Marking,
        phase: SignalPhase,
        step: u64,
    },
}

/// Action → transition map. Actions without a transition are always valid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionMapping {
    transitions: [Option<TransitionId>; JunctionAction::COUNT],
}

impl ActionMapping {
    /// Checks that mapped transitions are distinct and that every transition
    /// of `net` is the image of exactly one action.
    pub fn new(
        net: &PetriNet,
        transitions: [Option<TransitionId>; JunctionAction::COUNT],
    ) -> Result<Self, WrapperError> {
        let mut hits = vec![0usize; net.transitions().len()];
        for t in transitions.iter().flatten() {
            if *t >= hits.len() {
                return Err(WrapperError::Mapping(format!("transition #{t} not in net")));
            }
            hits[*t] += 1;
        }
        if let Some(t) = hits.iter().position(|&n| n != 1) {
            return Err(WrapperError::Mapping(format!(
                "transition `{}` is mapped by {} actions",
                net.transitions()[t],
                hits[t]
            )));
        }
        Ok(ActionMapping { transitions })
    }

    /// `RtoG_g`/`GtoR_g` by name; `DoNothing` unmapped.
    pub fn junction(net: &PetriNet) -> Result<Self, WrapperError> {
        let mut transitions = [None; JunctionAction::COUNT];
        for a in JunctionAction::all() {
            if let Some(name) = a.transition_name() {
                transitions[a.index()] = Some(net.transition_id(&name)?);
            }
        }
        Self::new(net, transitions)
    }

    pub fn transition(&self, a: JunctionAction) -> Option<TransitionId> {
        self.transitions[a.index()]
    }
}

/// Predicate on the junction state that a place stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacePredicate {
    /// `Green_g`: the phase is green for `g`.
    Green(Group),
    /// `Red_g`: the phase is not green for `g`.
    NotGreen(Group),
    /// `Safe`: no group is green.
    AllRed,
}

impl PlacePredicate {
    pub fn holds(self, phase: SignalPhase) -> bool {
        match self {
            PlacePredicate::Green(g) => phase == SignalPhase::Green(g),
            PlacePredicate::NotGreen(g) => phase != SignalPhase::Green(g),
            PlacePredicate::AllRed => phase == SignalPhase::AllRed,
        }
    }
}

/// Place → predicate map, one entry per place of the net.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceMapping {
    predicates: Vec<PlacePredicate>,
}

impl PlaceMapping {
    pub fn new(net: &PetriNet, predicates: Vec<PlacePredicate>) -> Result<Self, WrapperError> {
        if predicates.len() != net.places().len() {
            return Err(WrapperError::Mapping(format!(
                "{} predicates for {} places",
                predicates.len(),
                net.places().len()
            )));
        }
        Ok(PlaceMapping { predicates })
    }

    /// Maps `Red_g`, `Green_g` and `Safe` by name.
    pub fn junction(net: &PetriNet) -> Result<Self, WrapperError> {
        let predicates = net
            .places()
            .iter()
            .map(|p| {
                if p == "Safe" {
                    return Ok(PlacePredicate::AllRed);
                }
                let group = |label: &str| Group::ALL.into_iter().find(|g| g.label() == label);
                match p.split_once('_') {
                    Some(("Red", g)) => group(g).map(PlacePredicate::NotGreen),
                    Some(("Green", g)) => group(g).map(PlacePredicate::Green),
                    _ => None,
                }
                .ok_or_else(|| WrapperError::Mapping(format!("no predicate for place `{p}`")))
            })
            .collect::<Result<_, _>>()?;
        Self::new(net, predicates)
    }

    pub fn predicate(&self, place: usize) -> PlacePredicate {
        self.predicates[place]
    }
}

/// Agent-internal marking paired with the external observation.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedState {
    pub marking: Marking,
    pub observation: Observation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WrapperMode {
    /// Invalid requests are replaced by `DoNothing`.
    Shield,
    /// Invalid requests are no-ops; the reward's constraint bonus is withheld.
    Penalty,
    /// As `Penalty`; the agent is expected to mask invalid actions itself.
    Mask,
}

/// Boolean validity per action index.
pub type ActionMask = [bool; JunctionAction::COUNT];

/// Actions whose transition is enabled in `m`, plus all unmapped actions,
/// in index order.
pub fn valid_actions(net: &PetriNet, m: &Marking, mapping: &ActionMapping) -> Vec<JunctionAction> {
    let mask = valid_mask(net, m, mapping);
    JunctionAction::all().filter(|a| mask[a.index()]).collect()
}

pub fn valid_mask(net: &PetriNet, m: &Marking, mapping: &ActionMapping) -> ActionMask {
    let enabled = net.enabled_transitions(m);
    let mut mask = [false; JunctionAction::COUNT];
    for a in JunctionAction::all() {
        mask[a.index()] = match mapping.transition(a) {
            None => true,
            Some(t) => enabled.contains(&t),
        };
    }
    mask
}

/// Every place is marked exactly when its predicate holds of `env`.
pub fn check_sync(net: &PetriNet, m: &Marking, env: &Junction, places: &PlaceMapping) -> bool {
    (0..net.places().len()).all(|p| (m.get(p) > 0) == places.predicate(p).holds(env.phase()))
}

/// Fixed-scale encoding of a [`CombinedState`] for the Q-network.
///
/// Layout: the place token counts in net order, then the 16 observation
/// values with queue lengths divided by `queue_capacity` and waits divided by
/// `episode_cap`, each clipped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateEncoder {
    pub places: usize,
    pub queue_capacity: f64,
    pub episode_cap: f64,
}

impl StateEncoder {
    pub fn new(net: &PetriNet, config: &JunctionConfig) -> Self {
        StateEncoder {
            places: net.places().len(),
            queue_capacity: config.queue_capacity as f64,
            episode_cap: config.episode_cap as f64,
        }
    }

    pub fn dim(&self) -> usize {
        self.places + OBSERVATION_LEN
    }

    pub fn encode(&self, cs: &CombinedState) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend(cs.marking.tokens().iter().map(|&t| t as f64));
        for (i, x) in cs.observation.as_slice().iter().enumerate() {
            let cap = if i % 2 == 0 {
                self.queue_capacity
            } else {
                self.episode_cap
            };
            v.push((x / cap).clamp(0.0, 1.0));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrappedStepResult {
    pub next: CombinedState,
    pub reward: f64,
    /// Whether the *requested* action was valid.
    pub constraint_fulfilled: bool,
    pub requested: JunctionAction,
    pub applied_action: JunctionAction,
    /// Valid actions before the step.
    pub valid_before: Vec<JunctionAction>,
    /// Valid actions in `next`.
    pub next_valid: ActionMask,
    pub info: StepInfo,
}

impl WrappedStepResult {
    pub const VIOLATION_CSV_HEADER: &'static str = "step,requested,applied,valid_set";

    /// `step,requested,applied,valid_set` for the violation log.
    pub fn violation_csv_row(&self) -> String {
        let valid: Vec<String> = self
            .valid_before
            .iter()
            .map(|a| a.index().to_string())
            .collect();
        format!(
            "{},{},{},{}",
            self.info.step,
            self.requested.index(),
            self.applied_action.index(),
            valid.join(";")
        )
    }
}

/// The wrapped environment for one episode runner.
#[derive(Debug, Clone)]
pub struct ConstraintWrapper {
    net: Arc<PetriNet>,
    actions: ActionMapping,
    places: PlaceMapping,
    mode: WrapperMode,
    weights: RewardWeights,
    config: JunctionConfig,
    env: Junction,
    marking: Marking,
    observation: Observation,
}

impl ConstraintWrapper {
    pub fn new(
        net: Arc<PetriNet>,
        actions: ActionMapping,
        places: PlaceMapping,
        mode: WrapperMode,
        weights: RewardWeights,
        config: JunctionConfig,
    ) -> Result<Self, WrapperError> {
        let (env, observation) = Junction::reset(config.clone())?;
        let marking = net.initial_marking().clone();
        if !check_sync(&net, &marking, &env, &places) {
            return Err(WrapperError::OutOfSync {
                marking,
                phase: env.phase(),
                step: 0,
            });
        }
        Ok(ConstraintWrapper {
            net,
            actions,
            places,
            mode,
            weights,
            config,
            env,
            marking,
            observation,
        })
    }

    /// Junction wrapper with the name-based default mappings.
    pub fn junction(
        net: Arc<PetriNet>,
        mode: WrapperMode,
        weights: RewardWeights,
        config: JunctionConfig,
    ) -> Result<Self, WrapperError> {
        let actions = ActionMapping::junction(&net)?;
        let places = PlaceMapping::junction(&net)?;
        Self::new(net, actions, places, mode, weights, config)
    }

    /// Starts a new episode with the given junction seed.
    pub fn reset(&mut self, seed: u64) -> Result<CombinedState, WrapperError> {
        let (env, obs) = Junction::reset(self.config.clone().with_seed(seed))?;
        self.env = env;
        self.observation = obs;
        self.marking = self.net.initial_marking().clone();
        Ok(self.state())
    }

    pub fn state(&self) -> CombinedState {
        CombinedState {
            marking: self.marking.clone(),
            observation: self.observation,
        }
    }

    pub fn net(&self) -> &PetriNet {
        &self.net
    }

    pub fn mode(&self) -> WrapperMode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: WrapperMode) {
        self.mode = mode;
    }

    pub fn weights(&self) -> &RewardWeights {
        &self.weights
    }

    pub fn env(&self) -> &Junction {
        &self.env
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }

    pub fn encoder(&self) -> StateEncoder {
        StateEncoder::new(&self.net, &self.config)
    }

    pub fn is_done(&self) -> bool {
        self.env.is_terminated()
    }

    pub fn valid_actions(&self) -> Vec<JunctionAction> {
        valid_actions(&self.net, &self.marking, &self.actions)
    }

    pub fn valid_mask(&self) -> ActionMask {
        valid_mask(&self.net, &self.marking, &self.actions)
    }

    pub fn in_sync(&self) -> bool {
        check_sync(&self.net, &self.marking, &self.env, &self.places)
    }

    pub fn step(&mut self, requested: JunctionAction) -> Result<WrappedStepResult, WrapperError> {
        let valid_before = self.valid_actions();
        let fulfilled = valid_before.contains(&requested);
        let applied = if !fulfilled && self.mode == WrapperMode::Shield {
            JunctionAction::DoNothing
        } else {
            requested
        };

        // A disabled transition leaves the marking alone, and the junction
        // sees a no-op so its phase keeps matching the marking.
        let env_action = match self.actions.transition(applied) {
            None => applied,
            Some(t) if self.net.is_enabled(&self.marking, t)? => {
                self.marking = self.net.fire(&self.marking, t)?;
                applied
            }
            Some(_) => JunctionAction::DoNothing,
        };

        let prev_obs = self.observation;
        let (obs, mut info) = self.env.step(env_action)?;
        info.action = applied;
        self.observation = obs;
        if !self.in_sync() {
            return Err(WrapperError::OutOfSync {
                marking: self.marking.clone(),
                phase: self.env.phase(),
                step: info.step,
            });
        }
        let reward = compute_reward(&prev_obs, &info, fulfilled, info.step, &self.weights);
        Ok(WrappedStepResult {
            next: self.state(),
            reward,
            constraint_fulfilled: fulfilled,
            requested,
            applied_action: applied,
            valid_before,
            next_valid: self.valid_mask(),
            info,
        })
    }
}
