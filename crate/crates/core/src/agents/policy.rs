use rand::Rng;
use serde::{Deserialize, Serialize};

use super::replay::Transition;
use super::{AgentConfig, AgentError};
use crate::neural::Mlp;
use crate::wrapper::ActionMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentMode {
    /// Plain DQN: explores, acts and bootstraps over all actions.
    Dqn,
    /// Restricts exploration, greedy choice and bootstrap targets to the
    /// valid actions of the Petri-net marking.
    PnCdqn,
}

impl AgentMode {
    pub fn label(self) -> &'static str {
        match self {
            AgentMode::Dqn => "DQN",
            AgentMode::PnCdqn => "PN-CDQN",
        }
    }
}

/// Linear decay from `epsilon_start` at step 0 to `epsilon_final` at
/// `epsilon_decay_steps`, constant afterwards.
pub fn epsilon_at(step: u64, cfg: &AgentConfig) -> f64 {
    if cfg.epsilon_decay_steps == 0 || step >= cfg.epsilon_decay_steps {
        return cfg.epsilon_final;
    }
    let frac = step as f64 / cfg.epsilon_decay_steps as f64;
    cfg.epsilon_start + frac * (cfg.epsilon_final - cfg.epsilon_start)
}

/// Index of the largest `q` among allowed actions; ties go to the lowest index.
pub fn masked_argmax(q: &[f64], mask: Option<&ActionMask>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in q.iter().enumerate() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        if best.map_or(true, |b| v > q[b]) {
            best = Some(i);
        }
    }
    best
}

/// Epsilon-greedy action choice. Always consumes one uniform draw for the
/// explore/exploit decision, plus one more when exploring.
pub fn select_action<R: Rng + ?Sized>(
    qnet: &Mlp,
    state: &[f64],
    valid_mask: &ActionMask,
    eps: f64,
    rng: &mut R,
    mode: AgentMode,
) -> Result<usize, AgentError> {
    let mask = match mode {
        AgentMode::PnCdqn => {
            if !valid_mask.iter().any(|&b| b) {
                return Err(AgentError::EmptyMask);
            }
            Some(valid_mask)
        }
        AgentMode::Dqn => None,
    };
    let explore = rng.gen::<f64>() < eps;
    if explore {
        return Ok(match mask {
            Some(m) => {
                let valid: Vec<usize> = (0..m.len()).filter(|&i| m[i]).collect();
                valid[rng.gen_range(0..valid.len())]
            }
            None => rng.gen_range(0..valid_mask.len()),
        });
    }
    let q = qnet.forward(state)?;
    Ok(masked_argmax(&q, mask).expect("mask has a valid action"))
}

/// Bootstrap targets: `r` for terminal items, else `r + γ·max Q'(next)` over
/// the next state's valid actions (PN-CDQN) or over all actions (DQN).
pub fn compute_targets(
    target_net: &Mlp,
    batch: &[&Transition],
    gamma: f64,
    mode: AgentMode,
) -> Result<Vec<f64>, AgentError> {
    batch
        .iter()
        .map(|t| {
            if t.done {
                return Ok(t.reward);
            }
            let q = target_net.forward(&t.next_state)?;
            let mask = match mode {
                AgentMode::PnCdqn => Some(&t.next_valid_mask),
                AgentMode::Dqn => None,
            };
            let best = masked_argmax(&q, mask).ok_or(AgentError::EmptyMask)?;
            Ok(t.reward + gamma * q[best])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mask_of(valid: &[usize]) -> ActionMask {
        let mut m = [false; 9];
        for &i in valid {
            m[i] = true;
        }
        m
    }

    /// A 9→9 identity network: Q(x) = x.
    fn identity_net() -> Mlp {
        let mut net = Mlp::zeros(&[9, 9]).unwrap();
        let mut p = vec![0.0; 90];
        for i in 0..9 {
            p[i * 9 + i] = 1.0;
        }
        net.set_params(&p).unwrap();
        net
    }

    #[test]
    fn epsilon_schedule() {
        let cfg = AgentConfig::full();
        assert_eq!(epsilon_at(0, &cfg), 1.0);
        assert_eq!(epsilon_at(400_000, &cfg), 0.04);
        assert_eq!(epsilon_at(9_000_000, &cfg), 0.04);
        assert!((epsilon_at(200_000, &cfg) - 0.52).abs() < 1e-12);
    }

    #[test]
    fn greedy_choice_and_ties() {
        let net = identity_net();
        let q = [9.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let all = [true; 9];
        assert_eq!(select_action(&net, &q, &all, 0.0, &mut rng, AgentMode::Dqn).unwrap(), 0);
        let m = mask_of(&[4, 7]);
        assert_eq!(select_action(&net, &q, &m, 0.0, &mut rng, AgentMode::PnCdqn).unwrap(), 4);
        // DQN ignores the mask.
        assert_eq!(select_action(&net, &q, &m, 0.0, &mut rng, AgentMode::Dqn).unwrap(), 0);
    }

    #[test]
    fn exploration_stays_within_valid_set() {
        let net = identity_net();
        let m = mask_of(&[4, 7]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 10_000;
        let mut fours = 0;
        for _ in 0..n {
            let a = select_action(&net, &[0.0; 9], &m, 1.0, &mut rng, AgentMode::PnCdqn).unwrap();
            assert!(a == 4 || a == 7);
            fours += (a == 4) as u32;
        }
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((fours as f64 - n as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn empty_mask_is_an_invariant_error() {
        let net = identity_net();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = select_action(&net, &[0.0; 9], &[false; 9], 0.0, &mut rng, AgentMode::PnCdqn);
        assert!(matches!(r, Err(AgentError::EmptyMask)));
    }

    #[test]
    fn targets_by_hand() {
        let net = identity_net();
        let ascending: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let item = Transition {
            state: vec![0.0; 9],
            action: 0,
            reward: 1.0,
            next_state: ascending,
            done: false,
            next_valid_mask: mask_of(&[4, 7]),
            violated: false,
        };
        let masked = compute_targets(&net, &[&item], 0.9, AgentMode::PnCdqn).unwrap();
        assert!((masked[0] - 7.3).abs() < 1e-12);
        let plain = compute_targets(&net, &[&item], 0.9, AgentMode::Dqn).unwrap();
        assert!((plain[0] - 8.2).abs() < 1e-12);

        let terminal = Transition {
            reward: -3.0,
            done: true,
            ..item
        };
        assert_eq!(compute_targets(&net, &[&terminal], 0.9, AgentMode::PnCdqn).unwrap(), vec![-3.0]);
    }
}
