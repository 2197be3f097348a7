use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use toml::Value;

use super::HarnessError;
use crate::agents::{AgentConfig, AgentMode};
use crate::junction::JunctionConfig;
use crate::metrics::RewardWeights;
use crate::petri::{parse_net, traffic_light_net, PetriNet};
use crate::wrapper::{ConstraintWrapper, WrapperMode};

/// Name under which the built-in traffic-light net is selected.
pub const BUILTIN_NET: &str = "traffic_light";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Desk,
    Full,
}

/// Everything a run depends on. Serialized back out as the resolved snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub profile: Profile,
    pub seed: u64,
    /// Path of a net JSON file, or `traffic_light`.
    pub pn: String,
    /// Training-time wrapper mode; evaluation always shields. Defaults to
    /// mask for pn_cdqn and penalty for dqn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wrapper: Option<WrapperMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Transition delay; stored, not interpreted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<u64>,
    /// Constraint cost threshold; stored, not interpreted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub weights: RewardWeights,
    pub junction: JunctionConfig,
    pub agent: AgentConfig,
}

impl RunConfig {
    pub fn for_profile(profile: Profile) -> Self {
        RunConfig {
            profile,
            seed: 0,
            pn: BUILTIN_NET.to_string(),
            wrapper: None,
            output_dir: None,
            delta: None,
            threshold: None,
            weights: RewardWeights::new(0.0, 0.0, 1.0, 1.5, 0.0),
            junction: JunctionConfig::default(),
            agent: match profile {
                Profile::Desk => AgentConfig::desk(),
                Profile::Full => AgentConfig::full(),
            },
        }
    }

    /// Parses a TOML document, applies `key=value` overrides, then fills
    /// anything unset from the selected profile's defaults.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, HarnessError> {
        let mut user: Value = text
            .parse::<toml::Table>()
            .map(Value::Table)
            .map_err(|e| HarnessError::Config(format!("config: {e}")))?;
        for o in overrides {
            apply_override(&mut user, o)?;
        }
        let profile = match user.get("profile") {
            None => Profile::Desk,
            Some(v) => v
                .clone()
                .try_into()
                .map_err(|e| HarnessError::Config(format!("profile: {e}")))?,
        };
        let mut merged = Value::try_from(RunConfig::for_profile(profile))
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        merge(&mut merged, user);
        let cfg: RunConfig = merged
            .try_into()
            .map_err(|e| HarnessError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text, overrides)
    }

    /// Profile defaults with overrides only.
    pub fn from_overrides(overrides: &[String]) -> Result<Self, HarnessError> {
        Self::from_toml("", overrides)
    }

    pub fn to_toml(&self) -> String {
        let mut resolved = self.clone();
        resolved.wrapper = Some(self.wrapper_mode());
        toml::to_string(&resolved).expect("run config serializes")
    }

    pub fn wrapper_mode(&self) -> WrapperMode {
        self.wrapper.unwrap_or(match self.agent.mode {
            AgentMode::PnCdqn => WrapperMode::Mask,
            AgentMode::Dqn => WrapperMode::Penalty,
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.agent
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.junction
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if !self.weights.is_valid() {
            return Err(HarnessError::Config(
                "reward weights must be finite and non-negative".into(),
            ));
        }
        if self.seed > i64::MAX as u64 || self.junction.seed > i64::MAX as u64 {
            return Err(HarnessError::Config("seeds must fit in a signed 64-bit integer".into()));
        }
        match (self.agent.mode, self.wrapper_mode()) {
            (AgentMode::PnCdqn, WrapperMode::Mask) => {
                if self.weights.w0 != 0.0 {
                    return Err(HarnessError::Config(
                        "pn_cdqn runs need weights.w0 = 0: the constraint penalty is redundant under masking"
                            .into(),
                    ));
                }
            }
            (AgentMode::PnCdqn, m) => {
                return Err(HarnessError::Config(format!(
                    "pn_cdqn trains under mask mode, not {m:?}"
                )))
            }
            (AgentMode::Dqn, WrapperMode::Mask) => {
                return Err(HarnessError::Config(
                    "dqn trains under penalty or shield mode".into(),
                ))
            }
            (AgentMode::Dqn, _) => {}
        }
        if let Some(t) = self.threshold {
            if !t.is_finite() {
                return Err(HarnessError::Config("threshold must be finite".into()));
            }
        }
        if self.profile == Profile::Full {
            log::warn!(
                "full profile: {} training steps, expect a very long run",
                self.agent.max_steps
            );
        }
        Ok(())
    }

    pub fn load_net(&self) -> Result<PetriNet, HarnessError> {
        if self.pn == BUILTIN_NET {
            return Ok(traffic_light_net());
        }
        let path = Path::new(&self.pn);
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(parse_net(&text)?)
    }

    /// Wrapper in the configured training mode.
    pub fn wrapper(&self) -> Result<ConstraintWrapper, HarnessError> {
        let net = Arc::new(self.load_net()?);
        Ok(ConstraintWrapper::junction(
            net,
            self.wrapper_mode(),
            self.weights,
            self.junction.clone(),
        )?)
    }
}

/// Sets a dotted key path, parsing the value as a TOML literal and falling
/// back to a bare string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), HarnessError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(HarnessError::Config(format!("bad override key `{key}`")));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));

    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = root;
    for p in &parts[..parts.len() - 1] {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| HarnessError::Config(format!("`{key}`: `{p}` is not a table")))?;
        cur = table
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(toml::Table::new()));
    }
    cur.as_table_mut()
        .ok_or_else(|| HarnessError::Config(format!("`{key}`: parent is not a table")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Recursive merge of tables; `over` wins on conflicts. Integers landing on
/// float defaults are widened so `w2 = 1` is accepted.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot @ Value::Float(_), Value::Integer(i)) => *slot = Value::Float(i as f64),
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_desk_profile() {
        let c = RunConfig::from_toml("", &[]).unwrap();
        assert_eq!(c, RunConfig::for_profile(Profile::Desk));
        assert_eq!(c.wrapper_mode(), WrapperMode::Mask);
    }

    #[test]
    fn overrides_and_nested_keys() {
        let text = "seed = 3\n[agent]\ngamma = 0.9\n";
        let sets = vec!["agent.max_steps=1000".to_string(), "weights.w2=2".to_string()];
        let c = RunConfig::from_toml(text, &sets).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.agent.gamma, 0.9);
        assert_eq!(c.agent.max_steps, 1000);
        assert_eq!(c.weights.w2, 2.0);
        assert_eq!(c.agent.batch_size, 64);
    }

    #[test]
    fn full_profile_carries_long_schedule() {
        let c = RunConfig::from_toml("profile = \"full\"", &[]).unwrap();
        assert_eq!(c.agent.max_steps, 15_000_000);
        assert_eq!(c.agent.random_steps, 200_000);
    }

    #[test]
    fn pn_cdqn_with_penalty_weight_is_rejected() {
        let e = RunConfig::from_overrides(&["weights.w0=1".into()]).unwrap_err();
        assert!(matches!(e, HarnessError::Config(_)));
        let ok = RunConfig::from_overrides(&[
            "weights.w0=1".into(),
            "agent.mode=dqn".into(),
        ])
        .unwrap();
        assert_eq!(ok.wrapper_mode(), WrapperMode::Penalty);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("sed = 1", &[]).is_err());
        assert!(RunConfig::from_overrides(&["agent.gama=0.5".into()]).is_err());
        assert!(RunConfig::from_overrides(&["noequals".into()]).is_err());
    }

    #[test]
    fn resolved_snapshot_round_trips() {
        let c = RunConfig::from_overrides(&["delta=2".into(), "threshold=0.5".into()]).unwrap();
        let back = RunConfig::from_toml(&c.to_toml(), &[]).unwrap();
        assert_eq!(back.wrapper, Some(WrapperMode::Mask));
        assert_eq!(back.delta, Some(2));
        assert_eq!(RunConfig { wrapper: None, ..back }, c);
    }
}
