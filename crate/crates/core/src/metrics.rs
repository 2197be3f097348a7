//! Parametric step reward and episode metrics (timesteps reached, AJWT).

use serde::{Deserialize, Serialize};

use crate::junction::{DrivenCar, Observation, StepInfo, LANES};

/// Weights of the five reward terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    /// Bonus for a request that satisfies the constraints (scaled by 200).
    pub w0: f64,
    /// Cars driven in excess of cars spawned.
    pub w1: f64,
    /// Per-lane longest wait among cars driven this step, summed (penalty).
    pub w2: f64,
    /// Longest wait currently queued, from the pre-step observation (penalty).
    pub w3: f64,
    /// Step index (rewards longevity).
    pub w4: f64,
}

impl RewardWeights {
    pub fn new(w0: f64, w1: f64, w2: f64, w3: f64, w4: f64) -> Self {
        RewardWeights { w0, w1, w2, w3, w4 }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.w0, self.w1, self.w2, self.w3, self.w4]
    }

    pub fn is_valid(&self) -> bool {
        self.as_array().iter().all(|w| w.is_finite() && *w >= 0.0)
    }

    /// Compact label listing the non-zero weights, e.g. `w2=1 w3=1.5`.
    pub fn label(&self) -> String {
        let parts: Vec<String> = self
            .as_array()
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, w)| format!("w{i}={w}"))
            .collect();
        if parts.is_empty() {
            "all-zero".to_string()
        } else {
            parts.join(" ")
        }
    }
}

/// Sum over lanes of the longest wait among `driven` cars in that lane.
fn driven_wait_sum(driven: &[DrivenCar]) -> f64 {
    let mut per_lane = [None::<u64>; LANES];
    for c in driven {
        let slot = &mut per_lane[c.lane];
        *slot = Some(slot.map_or(c.wait, |w| w.max(c.wait)));
    }
    per_lane.iter().flatten().map(|&w| w as f64).sum()
}

/// Step reward:
///
/// ```text
/// r = [fulfilled]·200·w0
///   + max(driven − spawned, 0)·w1
///   − Σ_lanes max wait of this step's driven cars·w2
///   − max_lanes L[l,1] of prev_obs·w3
///   + step·w4
/// ```
///
/// Empty maxima count as 0.
pub fn compute_reward(
    prev_obs: &Observation,
    info: &StepInfo,
    constraint_fulfilled: bool,
    step: u64,
    w: &RewardWeights,
) -> f64 {
    let fulfilled = if constraint_fulfilled { 200.0 * w.w0 } else { 0.0 };
    let surplus = (info.driven.len() as f64 - info.spawned as f64).max(0.0) * w.w1;
    let driven_wait = driven_wait_sum(&info.driven) * w.w2;
    let queued_wait = (0..LANES)
        .map(|l| prev_obs.max_wait(l))
        .fold(0.0, f64::max)
        * w.w3;
    fulfilled + surplus - driven_wait - queued_wait + step as f64 * w.w4
}

/// Everything the metrics need from one episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeRecord {
    pub driven: Vec<DrivenCar>,
    pub violations_requested: u64,
    pub total_requests: u64,
    pub end_step: u64,
    pub rewards: Vec<f64>,
}

impl EpisodeRecord {
    pub fn record(&mut self, info: &StepInfo, constraint_fulfilled: bool, reward: f64) {
        self.driven.extend_from_slice(&info.driven);
        self.total_requests += 1;
        if !constraint_fulfilled {
            self.violations_requested += 1;
        }
        self.end_step = info.step;
        self.rewards.push(reward);
    }

    pub fn episode_return(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Fraction of requests that violated the constraints, in `[0, 1]`.
    pub fn violation_rate(&self) -> f64 {
        if self.total_requests == 0 {
            0.0
        } else {
            self.violations_requested as f64 / self.total_requests as f64
        }
    }
}

/// Average junction waiting time over driven cars; 0 if none were driven.
pub fn ajwt(rec: &EpisodeRecord) -> f64 {
    if rec.driven.is_empty() {
        return 0.0;
    }
    rec.driven.iter().map(|c| c.wait as f64).sum::<f64>() / rec.driven.len() as f64
}

pub fn timesteps_reached(rec: &EpisodeRecord) -> u64 {
    rec.end_step
}

/// One evaluated episode, as written to the per-episode CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    pub timesteps: u64,
    pub violations: u64,
    pub requests: u64,
    pub violated_pct: f64,
    pub ajwt: f64,
    pub driven: u64,
}

impl EpisodeStats {
    pub const CSV_HEADER: &'static str =
        "episode,timesteps,violations,requests,violated_pct,ajwt,driven";

    pub fn from_record(episode: usize, rec: &EpisodeRecord) -> Self {
        EpisodeStats {
            episode,
            timesteps: timesteps_reached(rec),
            violations: rec.violations_requested,
            requests: rec.total_requests,
            violated_pct: 100.0 * rec.violation_rate(),
            ajwt: ajwt(rec),
            driven: rec.driven.len() as u64,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.episode,
            self.timesteps,
            self.violations,
            self.requests,
            self.violated_pct,
            self.ajwt,
            self.driven
        )
    }

    pub fn parse_csv_row(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 7 {
            return None;
        }
        Some(EpisodeStats {
            episode: f[0].parse().ok()?,
            timesteps: f[1].parse().ok()?,
            violations: f[2].parse().ok()?,
            requests: f[3].parse().ok()?,
            violated_pct: f[4].parse().ok()?,
            ajwt: f[5].parse().ok()?,
            driven: f[6].parse().ok()?,
        })
    }
}

/// Aggregate over evaluation episodes, one row of the summary CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub model: String,
    pub params: String,
    pub episodes: usize,
    pub timesteps_min: u64,
    pub timesteps_avg: f64,
    pub timesteps_max: u64,
    pub violated_min_pct: f64,
    pub violated_avg_pct: f64,
    pub violated_max_pct: f64,
    pub ajwt_avg: f64,
    /// Largest per-episode AJWT.
    pub ajwt_max: f64,
    pub violations_total: u64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl EvalSummary {
    pub const CSV_HEADER: &'static str = "model,params,timesteps_min,timesteps_avg,timesteps_max,violated_min_pct,violated_avg_pct,violated_max_pct,ajwt_avg,ajwt_max";

    pub fn from_episodes(model: &str, params: &str, eps: &[EpisodeStats]) -> Self {
        let fmin = |f: fn(&EpisodeStats) -> f64| eps.iter().map(f).fold(f64::INFINITY, f64::min);
        let fmax = |f: fn(&EpisodeStats) -> f64| eps.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let zero_if_empty = |x: f64| if eps.is_empty() { 0.0 } else { x };
        EvalSummary {
            model: model.to_string(),
            params: params.to_string(),
            episodes: eps.len(),
            timesteps_min: eps.iter().map(|e| e.timesteps).min().unwrap_or(0),
            timesteps_avg: mean(eps.iter().map(|e| e.timesteps as f64)),
            timesteps_max: eps.iter().map(|e| e.timesteps).max().unwrap_or(0),
            violated_min_pct: zero_if_empty(fmin(|e| e.violated_pct)),
            violated_avg_pct: mean(eps.iter().map(|e| e.violated_pct)),
            violated_max_pct: zero_if_empty(fmax(|e| e.violated_pct)),
            ajwt_avg: mean(eps.iter().map(|e| e.ajwt)),
            ajwt_max: zero_if_empty(fmax(|e| e.ajwt)),
            violations_total: eps.iter().map(|e| e.violations).sum(),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.model,
            self.params,
            self.timesteps_min,
            self.timesteps_avg,
            self.timesteps_max,
            self.violated_min_pct,
            self.violated_avg_pct,
            self.violated_max_pct,
            self.ajwt_avg,
            self.ajwt_max
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }
}
