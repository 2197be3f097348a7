//! Discrete-time simulator of a 4-way junction with eight lanes.
//!
//! Lane layout (per approach: straight/right lane, then left-turn lane):
//!
//! | lane | approach | movement       |
//! |------|----------|----------------|
//! | 0    | north    | straight/right |
//! | 1    | north    | left           |
//! | 2    | east     | straight/right |
//! | 3    | east     | left           |
//! | 4    | south    | straight/right |
//! | 5    | south    | left           |
//! | 6    | west     | straight/right |
//! | 7    | west     | left           |
//!
//! Each step runs, in order: signal change, service of the green group,
//! Poisson arrivals, clock tick, termination check.

mod action;
mod poisson;

use std::collections::VecDeque;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use action::{Group, JunctionAction};
pub use poisson::{sample_poisson, MAX_POISSON_MEAN};

pub const LANES: usize = 8;
pub const OBSERVATION_LEN: usize = 2 * LANES;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JunctionError {
    #[error("invalid junction config: {0}")]
    Config(String),
    #[error("Poisson mean must be finite and in [0, {MAX_POISSON_MEAN}], got {0}")]
    PoissonMean(f64),
    #[error("episode already terminated ({0})")]
    Terminated(TerminationReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    /// Some lane queue exceeded the capacity.
    Overflow,
    /// The step counter reached the episode cap.
    EpisodeCap,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminationReason::Overflow => "overflow",
            TerminationReason::EpisodeCap => "episode_cap",
        })
    }
}

/// Arrival demand: straight lanes carry twice the left-turn demand, with the
/// per-lane mean equal to `lambda_per_lane`.
pub const DEFAULT_LANE_WEIGHTS: [f64; LANES] = [
    4.0 / 3.0,
    2.0 / 3.0,
    4.0 / 3.0,
    2.0 / 3.0,
    4.0 / 3.0,
    2.0 / 3.0,
    4.0 / 3.0,
    2.0 / 3.0,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JunctionConfig {
    /// Mean arrivals per lane per step.
    pub lambda_per_lane: f64,
    /// Relative demand per lane; lane `l` arrives at `lambda_per_lane * lane_weights[l]`.
    pub lane_weights: [f64; LANES],
    /// Cars released per green lane per step.
    pub service_rate: u32,
    /// A queue longer than this ends the episode.
    pub queue_capacity: u32,
    pub episode_cap: u64,
    /// Lanes of each group, indexed by [`Group::index`].
    pub lane_groups: [[usize; 2]; 4],
    pub seed: u64,
}

impl Default for JunctionConfig {
    fn default() -> Self {
        JunctionConfig {
            lambda_per_lane: 0.15,
            lane_weights: DEFAULT_LANE_WEIGHTS,
            service_rate: 1,
            queue_capacity: 15,
            episode_cap: 1000,
            // swne: south+north left, we: west+east straight,
            // sn: south+north straight, wnes: west+east left
            lane_groups: [[1, 5], [2, 6], [0, 4], [3, 7]],
            seed: 0,
        }
    }
}

impl JunctionConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn arrival_rate(&self, lane: usize) -> f64 {
        self.lambda_per_lane * self.lane_weights[lane]
    }

    pub fn lanes_of(&self, g: Group) -> [usize; 2] {
        self.lane_groups[g.index()]
    }

    pub fn validate(&self) -> Result<(), JunctionError> {
        let bad = |m: String| Err(JunctionError::Config(m));
        if !self.lambda_per_lane.is_finite() || self.lambda_per_lane < 0.0 {
            return bad(format!("lambda_per_lane = {}", self.lambda_per_lane));
        }
        if let Some(w) = self.lane_weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return bad(format!("lane weight {w}"));
        }
        if (0..LANES).any(|l| self.arrival_rate(l) > MAX_POISSON_MEAN) {
            return bad("arrival rate too large".into());
        }
        if self.service_rate == 0 {
            return bad("service_rate must be positive".into());
        }
        if self.queue_capacity == 0 {
            return bad("queue_capacity must be positive".into());
        }
        if self.episode_cap == 0 {
            return bad("episode_cap must be positive".into());
        }
        let mut seen = [0u8; LANES];
        for (g, lanes) in self.lane_groups.iter().enumerate() {
            for &l in lanes {
                if l >= LANES {
                    return bad(format!("group {} uses lane {l}", Group::ALL[g]));
                }
                seen[l] += 1;
            }
        }
        if let Some(l) = seen.iter().position(|&n| n != 1) {
            return bad(format!(
                "lane {l} is covered {} times by lane_groups",
                seen[l]
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Car {
    pub id: u64,
    pub lane: usize,
    pub arrival_step: u64,
}

/// A car released into the junction during a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrivenCar {
    pub id: u64,
    pub lane: usize,
    pub wait: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignalPhase {
    #[default]
    AllRed,
    Green(Group),
}

impl SignalPhase {
    pub fn green_group(self) -> Option<Group> {
        match self {
            SignalPhase::AllRed => None,
            SignalPhase::Green(g) => Some(g),
        }
    }
}

/// `L[l,0]` (queue length) and `L[l,1]` (longest wait) for each lane,
/// interleaved: index `2l` and `2l + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation(pub [f64; OBSERVATION_LEN]);

impl Observation {
    pub fn queue_len(&self, lane: usize) -> f64 {
        self.0[2 * lane]
    }

    pub fn max_wait(&self, lane: usize) -> f64 {
        self.0[2 * lane + 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// Step counter after the tick.
    pub step: u64,
    pub action: JunctionAction,
    pub driven: Vec<DrivenCar>,
    pub spawned: u64,
    pub terminated: Option<TerminationReason>,
    /// The raw action did not match the current phase (e.g. a second green).
    pub raw_phase_conflict: bool,
}

#[derive(Debug, Clone)]
pub struct Junction {
    config: JunctionConfig,
    step: u64,
    lanes: [VecDeque<Car>; LANES],
    phase: SignalPhase,
    rng: ChaCha8Rng,
    next_car_id: u64,
    terminated: Option<TerminationReason>,
}

impl Junction {
    pub fn reset(config: JunctionConfig) -> Result<(Junction, Observation), JunctionError> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        let j = Junction {
            config,
            step: 0,
            lanes: Default::default(),
            phase: SignalPhase::AllRed,
            rng,
            next_car_id: 0,
            terminated: None,
        };
        let obs = j.observe();
        Ok((j, obs))
    }

    pub fn config(&self) -> &JunctionConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn phase(&self) -> SignalPhase {
        self.phase
    }

    pub fn lane(&self, l: usize) -> &VecDeque<Car> {
        &self.lanes[l]
    }

    pub fn cars_waiting(&self) -> usize {
        self.lanes.iter().map(VecDeque::len).sum()
    }

    pub fn terminated(&self) -> Option<TerminationReason> {
        self.terminated
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated.is_some()
    }

    pub fn observe(&self) -> Observation {
        let mut obs = [0.0; OBSERVATION_LEN];
        for (l, q) in self.lanes.iter().enumerate() {
            obs[2 * l] = q.len() as f64;
            // Queues are FIFO by arrival, so the front car waited longest.
            obs[2 * l + 1] = q.front().map_or(0, |c| self.step - c.arrival_step) as f64;
        }
        Observation(obs)
    }

    /// Appends a car that arrived at `arrival_step` (for scenario setup).
    pub fn push_car(&mut self, lane: usize, arrival_step: u64) {
        assert!(arrival_step <= self.step, "car cannot arrive in the future");
        assert!(
            self.lanes[lane]
                .back()
                .map_or(true, |c| c.arrival_step <= arrival_step),
            "lane queues are ordered by arrival"
        );
        let id = self.next_car_id;
        self.next_car_id += 1;
        self.lanes[lane].push_back(Car {
            id,
            lane,
            arrival_step,
        });
    }

    /// Overrides the signal phase (for scenario setup and phase re-sync).
    pub fn set_phase(&mut self, phase: SignalPhase) {
        self.phase = phase;
    }

    /// Advances the clock by one step, without further validation: switching
    /// to green while another group is green overwrites the phase and only
    /// flags `raw_phase_conflict`.
    pub fn step(&mut self, action: JunctionAction) -> Result<(Observation, StepInfo), JunctionError> {
        if let Some(reason) = self.terminated {
            return Err(JunctionError::Terminated(reason));
        }
        let mut conflict = false;
        match action {
            JunctionAction::RedToGreen(g) => {
                conflict = self.phase != SignalPhase::AllRed;
                self.phase = SignalPhase::Green(g);
            }
            JunctionAction::GreenToRed(g) => {
                if self.phase == SignalPhase::Green(g) {
                    self.phase = SignalPhase::AllRed;
                } else {
                    conflict = true;
                }
            }
            JunctionAction::DoNothing => {}
        }

        let mut driven = Vec::new();
        if let SignalPhase::Green(g) = self.phase {
            for lane in self.config.lanes_of(g) {
                for _ in 0..self.config.service_rate {
                    let Some(car) = self.lanes[lane].pop_front() else {
                        break;
                    };
                    driven.push(DrivenCar {
                        id: car.id,
                        lane,
                        wait: self.step - car.arrival_step,
                    });
                }
            }
        }

        let mut spawned = 0;
        for lane in 0..LANES {
            let k = sample_poisson(&mut self.rng, self.config.arrival_rate(lane))?;
            for _ in 0..k {
                self.push_car(lane, self.step);
            }
            spawned += k;
        }

        self.step += 1;
        let capacity = self.config.queue_capacity as usize;
        self.terminated = if self.lanes.iter().any(|q| q.len() > capacity) {
            Some(TerminationReason::Overflow)
        } else if self.step >= self.config.episode_cap {
            Some(TerminationReason::EpisodeCap)
        } else {
            None
        };

        let info = StepInfo {
            step: self.step,
            action,
            driven,
            spawned,
            terminated: self.terminated,
            raw_phase_conflict: conflict,
        };
        Ok((self.observe(), info))
    }
}

impl StepInfo {
    /// One row of the step trace CSV:
    /// `step,action,driven_count,driven_wait_times,spawned,terminated,reason`.
    pub fn csv_row(&self) -> String {
        let waits: Vec<String> = self.driven.iter().map(|c| c.wait.to_string()).collect();
        format!(
            "{},{},{},{},{},{},{}",
            self.step,
            self.action.index(),
            self.driven.len(),
            waits.join(";"),
            self.spawned,
            self.terminated.is_some(),
            self.terminated.map(|r| r.to_string()).unwrap_or_default()
        )
    }

    pub const CSV_HEADER: &'static str =
        "step,action,driven_count,driven_wait_times,spawned,terminated,reason";
}
